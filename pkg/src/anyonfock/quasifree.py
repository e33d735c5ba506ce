"""Doubled-space representation and the gauge-invariant quasi-free state.

The doubled site set ``Z`` holds two tagged copies of the base sites, flat
index ``copy * S + s`` with ``copy`` in ``{0, 1}``.  Operators ``D+/-`` mix
an annihilator on one copy with a creator on the other, and the vacuum
expectation of a word in them is compared with the Q-permanent of the
two-point function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import Sequence

import numpy as np

from . import qfock
from .qcore import Grid, QKernel
from .qfock import FockSpace, FockVector, HeadroomError

MAX_QPERM_ORDER = 6
MAX_FOCK_ORDER = 3


@dataclass(frozen=True, eq=False)
class DoubledGrid:
    """Two copies of ``base`` with the twisted kernel ``JQ``.

    ``JQ(x, y)`` is ``Q(x, y)`` for sites on the same copy and ``Q(y, x)``
    across copies; Delta is a shared axis cell on either copy.
    """

    base: Grid
    kernel: QKernel
    space: FockSpace = field(init=False, repr=False)

    def __post_init__(self):
        qb = self.kernel.site_matrix(self.base.site_coords)
        jq = np.block([[qb, qb.T], [qb.T, qb]])
        space = FockSpace(
            qmat=jq,
            site_axis=np.tile(self.base.site_axis, 2),
            site_weight=np.tile(self.base.site_weight, 2),
            eta=self.kernel.eta,
        )
        object.__setattr__(self, "space", space)

    @property
    def n_base(self) -> int:
        return self.base.n_sites

    def embed(self, h: np.ndarray, copy: int) -> np.ndarray:
        """Place a base function on copy 0 or 1 of ``Z``."""
        if copy not in (0, 1):
            raise ValueError(f"copy must be 0 or 1, got {copy!r}")
        out = np.zeros(2 * self.n_base, dtype=complex)
        out[copy * self.n_base:(copy + 1) * self.n_base] = h
        return out

    def vacuum(self, max_level: int) -> FockVector:
        return qfock.vacuum(self.space, max_level)


def _block_sqrt(blocks: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(blocks)
    vals = np.clip(vals, 0.0, None)
    return np.einsum("mij,mj,mkj->mik", vecs, np.sqrt(vals), vecs)


@dataclass(frozen=True, eq=False)
class KPair:
    """Multiplication-operator pair ``K1 = sqrt(T)``, ``K2 = sqrt(1 + eta T)``.

    Parameters
    ----------
    T : ndarray, shape (M, F, F)
        One real symmetric PSD fiber block per axis cell.  Block-diagonal
        structure is what makes ``K1, K2`` commute with multiplication by
        functions of the axis coordinate.
    eta : float
    """

    T: np.ndarray
    eta: float
    K1: np.ndarray = field(init=False, repr=False)
    K2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float)
        if T.ndim != 3 or T.shape[1] != T.shape[2]:
            raise ValueError(f"T must have shape (M, F, F), got {T.shape}")
        if not np.allclose(T, np.swapaxes(T, 1, 2), atol=1e-12):
            raise ValueError("T blocks must be symmetric")
        lam = np.linalg.eigvalsh(T)
        if lam.min() < -1e-12:
            raise ValueError(f"T must be PSD, smallest eigenvalue {lam.min():.3g}")
        if self.eta < 0 and lam.max() > -1.0 / self.eta + 1e-12:
            raise ValueError(
                f"eta < 0 needs T <= -1/eta = {-1.0 / self.eta:.6g}, "
                f"largest eigenvalue is {lam.max():.6g}"
            )
        eye = np.broadcast_to(np.eye(T.shape[1]), T.shape)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "K1", _block_sqrt(T))
        object.__setattr__(self, "K2", _block_sqrt(eye + self.eta * T))

    @classmethod
    def scalar(cls, kappa: float, eta: float, grid: Grid) -> KPair:
        """``T = kappa^2`` times the identity."""
        if kappa <= 0:
            raise ValueError("kappa must be positive")
        T = np.broadcast_to(kappa**2 * np.eye(grid.fiber_dim),
                            (grid.n_axis, grid.fiber_dim, grid.fiber_dim))
        return cls(T.copy(), eta)

    @property
    def n_axis(self) -> int:
        return self.T.shape[0]

    @property
    def fiber_dim(self) -> int:
        return self.T.shape[1]

    def _act(self, blocks: np.ndarray, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h, dtype=complex)
        if h.size != self.n_axis * self.fiber_dim:
            raise ValueError(f"smear has {h.size} entries, KPair acts on "
                             f"{self.n_axis * self.fiber_dim} sites")
        return np.einsum("mij,mj->mi", blocks, h.reshape(self.n_axis, self.fiber_dim)).ravel()

    def apply_T(self, h):
        return self._act(self.T, h)

    def apply_K1(self, h):
        return self._act(self.K1, h)

    def apply_K2(self, h):
        return self._act(self.K2, h)

    def constraint_residual(self) -> float:
        """``max |K2^T K2 - (1 + eta K1^T K1)|`` over all blocks."""
        eye = np.eye(self.fiber_dim)
        lhs = np.swapaxes(self.K2, 1, 2) @ self.K2
        rhs = eye + self.eta * np.swapaxes(self.K1, 1, 2) @ self.K1
        return float(np.abs(lhs - rhs).max())

    def commutator_residual(self, psi: np.ndarray) -> float:
        """Largest commutator entry of ``K1, K2`` with multiplication by ``psi(axis)``."""
        psi = np.asarray(psi)
        if psi.size != self.n_axis:
            raise ValueError("psi needs one value per axis cell")
        M = np.repeat(psi, self.fiber_dim)
        worst = 0.0
        for blocks in (self.K1, self.K2):
            dense = _dense(blocks)
            worst = max(worst, float(np.abs(dense * M[None, :] - M[:, None] * dense).max()))
        return worst


def _dense(blocks: np.ndarray) -> np.ndarray:
    m, f, _ = blocks.shape
    out = np.zeros((m * f, m * f))
    for a in range(m):
        out[a * f:(a + 1) * f, a * f:(a + 1) * f] = blocks[a]
    return out


def d_apply(sign: str, h: np.ndarray, pair: KPair, dgrid: DoubledGrid, F: FockVector) -> FockVector:
    """``D+(h)`` or ``D-(h)`` on a vector over the doubled space.

    ``D+(h) = a-(conj K1 h on copy 0) + a+(K2 h on copy 1)`` and
    ``D-(h) = a+(K1 h on copy 0) + a-(conj K2 h on copy 1)``; the
    annihilators are fed conjugated smears so their integrand is ``K h``.
    """
    if F.top_level + 1 > F.max_level:
        raise HeadroomError(f"D{sign} needs one free level, top is {F.top_level} of {F.max_level}")
    k1h = dgrid.embed(pair.apply_K1(h), 0)
    k2h = dgrid.embed(pair.apply_K2(h), 1)
    if sign == "+":
        return qfock.annihilate(np.conj(k1h), F) + qfock.create(k2h, F)
    if sign == "-":
        return qfock.create(k1h, F) + qfock.annihilate(np.conj(k2h), F)
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def _drop_above(F: FockVector, n: int) -> FockVector:
    levels = tuple(f if k <= n else None for k, f in enumerate(F.levels))
    return FockVector(F.space, levels, F.truncated)


def tau_vacuum(word: Sequence[tuple[str, np.ndarray]], pair: KPair, dgrid: DoubledGrid) -> complex:
    """Vacuum expectation of a word in ``D+/-``, letters applied right to left.

    Levels that cannot return to the vacuum within the remaining letters
    are discarded after each step.
    """
    L = len(word)
    state = dgrid.vacuum(L)
    for i, (sign, h) in enumerate(reversed(word)):
        state = _drop_above(d_apply(sign, h, pair, dgrid, state), L - i - 1)
    if state.truncated:
        raise HeadroomError("word exceeded the doubled truncation level")
    return state.vacuum_amplitude()


def s11(g: np.ndarray, h: np.ndarray, pair: KPair, grid: Grid) -> complex:
    """Two-point function ``sum g (T h) w`` (bilinear, no conjugation)."""
    return complex(np.sum(np.asarray(g) * pair.apply_T(h) * grid.site_weight))


def npoint_qpermanent(gs: Sequence[np.ndarray], hs: Sequence[np.ndarray], pair: KPair,
                      grid: Grid, kernel: QKernel) -> complex:
    """Q-permanent ``sum_pi int prod_i g_i(x_i) (T h_pi(i))(x_i) Q_pi(x) dm^n``.

    The site sum runs over all tuples, with ``Q = eta`` on shared cells.
    Permutations are reduced in lexicographic order.
    """
    n = len(gs)
    if n != len(hs):
        raise ValueError("gs and hs must have equal length")
    if n > MAX_QPERM_ORDER:
        raise ValueError(f"n = {n} exceeds the Q-permanent cap {MAX_QPERM_ORDER}")
    if n == 0:
        return 1.0 + 0j
    space = FockSpace.from_grid(kernel, grid)
    space.check_size(n)
    w = grid.site_weight
    th = [pair.apply_T(h) for h in hs]
    total = 0j
    for pi in permutations(range(n)):
        prod = np.ones(())
        for i in range(n):
            prod = np.multiply.outer(prod, np.asarray(gs[i]) * th[pi[i]] * w)
        total += complex(np.sum(qfock.q_pi_tensor(space, pi) * prod))
    return total


def npoint_word(gs, hs):
    """Word ``(+, g_n) ... (+, g_1) (-, h_1) ... (-, h_n)``."""
    return [("+", g) for g in reversed(gs)] + [("-", h) for h in hs]


def crosscheck_npoint(gs, hs, pair: KPair, grid: Grid, kernel: QKernel):
    """Fock-route and Q-permanent values of the ``n``-point function.

    Returns ``(value_fock, value_qperm, residual)``.
    """
    if len(gs) > MAX_FOCK_ORDER:
        raise ValueError(f"Fock route is capped at n = {MAX_FOCK_ORDER}")
    dgrid = DoubledGrid(grid, kernel)
    vf = tau_vacuum(npoint_word(gs, hs), pair, dgrid)
    vq = npoint_qpermanent(gs, hs, pair, grid, kernel)
    return vf, vq, abs(vf - vq)


def permanent(a: np.ndarray) -> complex:
    """Permanent by direct expansion over permutations."""
    a = np.asarray(a)
    n = a.shape[0]
    return complex(sum(math.prod(a[i, p[i]] for i in range(n)) for p in permutations(range(n))))


def determinant(a: np.ndarray) -> complex:
    return complex(np.linalg.det(np.asarray(a, dtype=complex)))


def s11_matrix(gs, hs, pair: KPair, grid: Grid) -> np.ndarray:
    return np.array([[s11(g, h, pair, grid) for h in hs] for g in gs])


def gram_matrix(smears: Sequence[np.ndarray], pair: KPair, dgrid: DoubledGrid) -> np.ndarray:
    """``G[i, j] = tau(D+(conj g_i) D-(g_j))``, the state on ``D-(g_i)^* D-(g_j)``."""
    n = len(smears)
    G = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            G[i, j] = tau_vacuum([("+", np.conj(smears[i])), ("-", smears[j])], pair, dgrid)
    return G


def gram_matrix_pairs(smears: Sequence[tuple[np.ndarray, np.ndarray]], pair: KPair,
                      dgrid: DoubledGrid) -> np.ndarray:
    """Gram matrix of the two-letter elements ``D-(u) D-(v)``.

    ``(D-(u) D-(v))^* = D+(conj v) D+(conj u)``.
    """
    n = len(smears)
    G = np.empty((n, n), dtype=complex)
    for i, (ui, vi) in enumerate(smears):
        for j, (uj, vj) in enumerate(smears):
            word = [("+", np.conj(vi)), ("+", np.conj(ui)), ("-", uj), ("-", vj)]
            G[i, j] = tau_vacuum(word, pair, dgrid)
    return G


def d_plus_power_norm(h: np.ndarray, k: int, pair: KPair, dgrid: DoubledGrid) -> float:
    """Norm of ``D+(h)^k`` applied to the doubled vacuum."""
    state = dgrid.vacuum(k)
    for _ in range(k):
        state = d_apply("+", h, pair, dgrid, state)
    return qfock.norm(state)


__all__ = [
    "DoubledGrid", "KPair", "d_apply", "tau_vacuum", "s11", "s11_matrix",
    "npoint_qpermanent", "npoint_word", "crosscheck_npoint", "permanent",
    "determinant", "gram_matrix", "gram_matrix_pairs", "d_plus_power_norm",
]
