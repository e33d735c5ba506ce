"""Truncated Q-symmetric Fock space on a finite site set.

Level ``n`` of a :class:`FockVector` is a dense order-``n`` complex array
over sites.  Tuples in which two sites share an axis cell are the discrete
image of the null set Delta and are kept at zero.  Zero levels are stored
as ``None``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import Sequence

import numpy as np

from .qcore import Grid, QKernel, inversions, off_delta_mask, weight_tensor

FACTORIAL_CAP = 8
MAX_TENSOR_ENTRIES = 10**7


class ResourceError(RuntimeError):
    """Raised instead of allocating a tensor above the configured cap."""


class HeadroomError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FockSpace:
    """Site data and twist matrix defining one Q-Fock space.

    Parameters
    ----------
    qmat : ndarray, shape (S, S)
        Twist ``Q`` on ordered site pairs, with ``eta`` on Delta-related pairs.
    site_axis : ndarray of int
        Axis cell of each site; equal entries mark Delta-related sites.
    site_weight : ndarray of float
    eta : float
    factorial_cap : int
        Largest level that :func:`project_qsym` will symmetrize.
    """

    qmat: np.ndarray
    site_axis: np.ndarray
    site_weight: np.ndarray
    eta: float
    factorial_cap: int = FACTORIAL_CAP
    max_entries: int = MAX_TENSOR_ENTRIES
    _masks: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_grid(cls, kernel: QKernel, grid: Grid, **kw) -> FockSpace:
        return cls(
            qmat=kernel.site_matrix(grid.site_coords),
            site_axis=grid.site_axis,
            site_weight=grid.site_weight,
            eta=kernel.eta,
            **kw,
        )

    @property
    def n_sites(self) -> int:
        return self.site_axis.size

    def check_size(self, n: int):
        if self.n_sites**n > self.max_entries:
            raise ResourceError(
                f"level {n} over {self.n_sites} sites needs {self.n_sites**n} "
                f"entries, cap is {self.max_entries}"
            )

    def mask(self, n: int) -> np.ndarray:
        if n not in self._masks:
            self.check_size(n)
            self._masks[n] = off_delta_mask(self.site_axis, n)
        return self._masks[n]

    def point(self, y: int) -> np.ndarray:
        """Discrete delta at site ``y``: Kronecker divided by the site weight."""
        out = np.zeros(self.n_sites, dtype=complex)
        out[y] = 1.0 / self.site_weight[y]
        return out

    def pairing(self, f: np.ndarray, g: np.ndarray) -> complex:
        """Weighted entrywise pairing ``sum f conj(g) w...w`` of same-order arrays."""
        return complex(np.sum(f * np.conj(g) * weight_tensor(self.site_weight, f.ndim)))


def _pair_factor(qmat: np.ndarray, n: int, i: int, j: int) -> np.ndarray:
    s = qmat.shape[0]
    shape = [1] * n
    shape[i] = s
    shape[j] = s
    return qmat.reshape(shape)


def q_pi_tensor(space: FockSpace, pi: Sequence[int]) -> np.ndarray | complex:
    """``Q_pi(x_1, ..., x_n)`` broadcast over all site tuples."""
    out: np.ndarray | complex = 1.0 + 0j
    for i, j in inversions(pi):
        out = out * _pair_factor(space.qmat, len(pi), i, j)
    return out


def project_qsym(space: FockSpace, tensor: np.ndarray) -> np.ndarray:
    """Q-symmetrization ``P_n``, zeroed on Delta-touching tuples.

    ``(P_n f)(x) = (1/n!) sum_pi Q_pi(x) f(x_{pi^-1(1)}, ..., x_{pi^-1(n)})``.
    """
    tensor = np.asarray(tensor, dtype=complex)
    n = tensor.ndim
    if n < 1:
        raise ValueError("project_qsym needs order n >= 1")
    if n > space.factorial_cap:
        raise ResourceError(f"order {n} exceeds the factorial cap {space.factorial_cap}")
    space.check_size(n)
    if n == 1:
        return tensor.copy()
    out = np.zeros_like(tensor)
    for pi in permutations(range(n)):
        # transpose(f, pi)[x] = f(x_{pi^-1(1)}, ..., x_{pi^-1(n)})
        out += q_pi_tensor(space, pi) * np.transpose(tensor, pi)
    out /= math.factorial(n)
    out[~space.mask(n)] = 0
    return out


@dataclass(frozen=True, eq=False)
class FockVector:
    """Finite-particle vector with levels ``0..max_level``; ``None`` marks a zero level."""

    space: FockSpace
    levels: tuple
    truncated: bool = False

    @property
    def max_level(self) -> int:
        return len(self.levels) - 1

    def level(self, n: int) -> np.ndarray:
        """Level ``n`` as an array, materializing zeros."""
        f = self.levels[n] if n <= self.max_level else None
        if f is None:
            self.space.check_size(n)
            return np.zeros((self.space.n_sites,) * n, dtype=complex)
        return f

    @property
    def top_level(self) -> int:
        """Highest nonzero level, -1 for the zero vector."""
        for n in range(self.max_level, -1, -1):
            if self.levels[n] is not None and np.any(self.levels[n]):
                return n
        return -1

    def vacuum_amplitude(self) -> complex:
        f = self.levels[0]
        return 0j if f is None else complex(f)

    def __add__(self, other: FockVector) -> FockVector:
        n = max(self.max_level, other.max_level)
        levels = []
        for k in range(n + 1):
            a = self.levels[k] if k <= self.max_level else None
            b = other.levels[k] if k <= other.max_level else None
            levels.append(a if b is None else b if a is None else a + b)
        return FockVector(self.space, tuple(levels), self.truncated or other.truncated)

    def __sub__(self, other: FockVector) -> FockVector:
        return self + other.scaled(-1)

    def scaled(self, c: complex) -> FockVector:
        return FockVector(
            self.space,
            tuple(None if f is None else c * f for f in self.levels),
            self.truncated,
        )

    def with_max_level(self, n: int) -> FockVector:
        levels = list(self.levels[: n + 1]) + [None] * (n - self.max_level)
        dropped = any(f is not None and np.any(f) for f in self.levels[n + 1:])
        return FockVector(self.space, tuple(levels), self.truncated or dropped)


def vacuum(space: FockSpace, max_level: int) -> FockVector:
    levels = [np.array(1.0 + 0j)] + [None] * max_level
    return FockVector(space, tuple(levels))


def zero_vector(space: FockSpace, max_level: int) -> FockVector:
    return FockVector(space, (None,) * (max_level + 1))


def from_levels(space: FockSpace, levels: Sequence, max_level: int | None = None,
                symmetrize: bool = True) -> FockVector:
    """Build a vector from raw level arrays, Q-symmetrizing levels of order >= 2."""
    max_level = len(levels) - 1 if max_level is None else max_level
    out = []
    for n in range(max_level + 1):
        f = levels[n] if n < len(levels) else None
        if f is not None:
            f = np.asarray(f, dtype=complex)
            if f.ndim != n:
                raise ValueError(f"level {n} has order {f.ndim}")
            if symmetrize and n >= 1:
                f = project_qsym(space, f)
        out.append(f)
    return FockVector(space, tuple(out))


def random_vector(space: FockSpace, rng: np.random.Generator, levels: Sequence[int],
                  max_level: int) -> FockVector:
    """Random Q-symmetric vector populated on the listed levels."""
    raw = [None] * (max_level + 1)
    for n in levels:
        shape = (space.n_sites,) * n
        raw[n] = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return from_levels(space, raw, max_level)


def inner(F: FockVector, G: FockVector) -> complex:
    """``<F, G> = sum_n n! <f_n, g_n>``, linear in ``F``."""
    total = 0j
    for n in range(min(F.max_level, G.max_level) + 1):
        f, g = F.levels[n], G.levels[n]
        if f is None or g is None:
            continue
        total += math.factorial(n) * F.space.pairing(f, g)
    return total


def norm(F: FockVector) -> float:
    return math.sqrt(max(inner(F, F).real, 0.0))


def create(h: np.ndarray, F: FockVector) -> FockVector:
    """Creation ``a+(h)``: level ``n+1`` becomes ``P_{n+1}(h (x) f_n)``.

    The image of the top level is dropped; the result is flagged truncated
    if that level was nonzero.
    """
    h = np.asarray(h, dtype=complex)
    N = F.max_level
    levels = [None] * (N + 1)
    truncated = F.truncated
    for n, f in enumerate(F.levels):
        if f is None:
            continue
        if n == N:
            truncated = truncated or bool(np.any(f))
            continue
        levels[n + 1] = project_qsym(F.space, np.multiply.outer(h, f))
    return FockVector(F.space, tuple(levels), truncated)


def annihilate(h: np.ndarray, F: FockVector) -> FockVector:
    """Annihilation ``a-(h)``: ``n * sum_y conj(h(y)) f_n(y, ...) w(y)``."""
    h = np.asarray(h, dtype=complex)
    hw = np.conj(h) * F.space.site_weight
    levels = [None] * (F.max_level + 1)
    for n, f in enumerate(F.levels):
        if f is None or n == 0:
            continue
        levels[n - 1] = n * np.tensordot(hw, f, axes=(0, 0))
    return FockVector(F.space, tuple(levels), F.truncated)


def point_create(y: int, F: FockVector) -> FockVector:
    """``d+_y`` at a single site."""
    return create(F.space.point(y), F)


def point_annihilate(y: int, F: FockVector) -> FockVector:
    """``d-_y``: level ``n`` maps to ``n f_n(y, ...)``."""
    levels = [None] * (F.max_level + 1)
    for n, f in enumerate(F.levels):
        if f is None or n == 0:
            continue
        levels[n - 1] = n * f[y]
    return FockVector(F.space, tuple(levels), F.truncated)


def b_apply(space: FockSpace, sign: str, h: np.ndarray, tensor: np.ndarray) -> np.ndarray:
    """Full-Fock operators ``b+(h)`` and ``b-(h)`` on one level.

    Input and output live on the discrete off-Delta tuples; entries of
    ``tensor`` on Delta are ignored.

    ``b-(h) f (x_1..x_{n-1}) = sum_i sum_y h(y) w(y) Q(y,x_1)...Q(y,x_{i-1})
    f(x_1..x_{i-1}, y, x_i..x_{n-1})``.
    """
    h = np.asarray(h, dtype=complex)
    f = np.where(space.mask(np.ndim(tensor)), tensor, 0) if np.ndim(tensor) else np.asarray(tensor, complex)
    n = f.ndim
    if sign == "+":
        out = np.multiply.outer(h, f)
        return np.where(space.mask(n + 1), out, 0)
    if sign != "-":
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    if n == 0:
        return np.zeros((), dtype=complex)
    hw = h * space.site_weight
    out = np.zeros((space.n_sites,) * (n - 1), dtype=complex)
    for i in range(n):
        g = np.moveaxis(f, i, 0)  # g[y, x_1, ..., x_{n-1}]
        twist = 1.0 + 0j
        for j in range(i):
            # Q(y, x_{j+1}) with y on axis 0 of g and x_{j+1} on axis j+1
            shape = [1] * n
            shape[0] = shape[j + 1] = space.n_sites
            twist = twist * space.qmat.reshape(shape)
        out += np.tensordot(hw, twist * g, axes=(0, 0))
    return out


def qcr_residual(g: np.ndarray, h: np.ndarray, F: FockVector) -> tuple[float, float, float]:
    """Norms of the three Q-CR residuals on ``F``, twisted sides as site double sums.

    (i)   ``a+(g)a+(h) - sum_{x,y} w w g(x) h(y) Q(y,x) d+_y d+_x``
    (ii)  ``a-(g)a-(h) - sum_{x,y} w w conj(g(x) h(y)) Q(y,x) d-_y d-_x``
    (iii) ``a-(g)a+(h) - <g,h> - sum_{x,y} w w conj(g(x)) h(y) Q(x,y) d+_y d-_x``
    """
    r1, r2, r3 = qcr_residual_vectors(g, h, F)
    return norm(r1), norm(r2), norm(r3)


def qcr_residual_vectors(g, h, F: FockVector):
    if F.top_level + 2 > F.max_level:
        raise HeadroomError(
            f"need 2 levels of headroom: top level {F.top_level}, max {F.max_level}"
        )
    space = F.space
    g = np.asarray(g, dtype=complex)
    h = np.asarray(h, dtype=complex)
    w = space.site_weight
    Q = space.qmat
    S = space.n_sites

    lhs1 = create(g, create(h, F))
    rhs1 = zero_vector(space, F.max_level)
    for y in range(S):
        # sum_x w(x) g(x) Q(y,x) d+_x F = a+(g Q(y,.)) F
        inner_y = create(g * Q[y], F)
        rhs1 = rhs1 + point_create(y, inner_y).scaled(w[y] * h[y])

    lhs2 = annihilate(g, annihilate(h, F))
    rhs2 = zero_vector(space, F.max_level)
    for y in range(S):
        # sum_x w(x) conj(g(x)) Q(y,x) d-_x F = a-(g conj(Q(y,.))) F
        inner_y = annihilate(g * np.conj(Q[y]), F)
        rhs2 = rhs2 + point_annihilate(y, inner_y).scaled(w[y] * np.conj(h[y]))

    lhs3 = annihilate(g, create(h, F))
    rhs3 = F.scaled(np.sum(np.conj(g) * h * w))
    for y in range(S):
        # sum_x w(x) conj(g(x)) Q(x,y) d-_x F = a-(g conj(Q(.,y))) F
        inner_y = annihilate(g * np.conj(Q[:, y]), F)
        rhs3 = rhs3 + point_create(y, inner_y).scaled(w[y] * h[y])

    return lhs1 - rhs1, lhs2 - rhs2, lhs3 - rhs3


def mixed_defect_level1(space: FockSpace, g, h, f) -> np.ndarray:
    """Exact grid defect of relation (iii) on a one-particle vector ``f``.

    ``r(b) = - sum_{a ~ b} w(a) conj(g(a)) [h(a) f(b) + Q(a,b) h(b) f(a)]``
    where ``a ~ b`` means shared axis cell; with one site per cell this is
    ``-(1 + eta) w(b) conj(g(b)) h(b) f(b)``.
    """
    g, h, f = (np.asarray(a, dtype=complex) for a in (g, h, f))
    w = space.site_weight
    same = space.site_axis[:, None] == space.site_axis[None, :]  # [a, b]
    cg = np.conj(g) * w
    t1 = (same * (cg * h)[:, None]).sum(axis=0) * f
    t2 = (same * space.qmat * (cg * f)[:, None]).sum(axis=0) * h
    return -(t1 + t2)


def reorder_residual(h1, h2, F: FockVector) -> FockVector:
    """Residual of ``d+_x d-_y = Q(x,y) d-_y d+_x - eta delta(x,y)`` smeared by ``h1(x) h2(y)``.

    Left side is ``sum w w h1(x) h2(y) d+_x d-_y``; the delta term becomes
    ``eta sum_x w(x) h1(x) h2(x)``.
    """
    space = F.space
    h1 = np.asarray(h1, dtype=complex)
    h2 = np.asarray(h2, dtype=complex)
    w = space.site_weight
    lhs = create(h1, annihilate(np.conj(h2), F))
    rhs = F.scaled(-space.eta * np.sum(w * h1 * h2))
    for x in range(space.n_sites):
        # sum_y w(y) h2(y) Q(x,y) d-_y G = a-(conj(h2 Q(x,.))) G
        inner_x = annihilate(np.conj(h2 * space.qmat[x]), point_create(x, F))
        rhs = rhs + inner_x.scaled(w[x] * h1[x])
    return lhs - rhs


def reorder_defect_level1(space: FockSpace, h1, h2, f) -> np.ndarray:
    """Exact grid residual of :func:`reorder_residual` on a one-particle ``f``.

    ``r(b) = h1(b) sum_{y ~ b} w h2 f + eta f(b) sum_{y ~ b} w h1 h2``; it
    vanishes with the cell masses.
    """
    h1, h2, f = (np.asarray(a, dtype=complex) for a in (h1, h2, f))
    w = space.site_weight
    same = (space.site_axis[:, None] == space.site_axis[None, :]).astype(float)
    return h1 * (same @ (w * h2 * f)) + space.eta * (same @ (w * h1 * h2)) * f


def exclusion_norm(kernel: QKernel, h: np.ndarray, k: int, F: FockVector) -> float:
    """Norm of ``a+(h)^k F`` for ``q`` a nontrivial ``k``-th root of unity."""
    if not kernel.is_root_of_unity(k):
        raise ValueError(f"q = {kernel.q!r} is not a k-th root of unity other than 1 (k={k})")
    if F.top_level + k > F.max_level:
        raise HeadroomError(
            f"a+(h)^{k} on a vector of top level {F.top_level} needs max level "
            f">= {F.top_level + k}, have {F.max_level}"
        )
    out = F
    for _ in range(k):
        out = create(h, out)
    return norm(out)


def constant_symmetrization(kernel: QKernel, k: int) -> complex:
    """``(P_k 1)(x_1, ..., x_k)`` at a strictly increasing tuple of ``k`` cells."""
    space = FockSpace.from_grid(kernel, Grid.uniform(k))
    ones = np.ones((k,) * k, dtype=complex)
    return complex(project_qsym(space, ones)[tuple(range(k))])


def is_qsymmetric(space: FockSpace, f: np.ndarray, tol: float = 1e-10) -> bool:
    """Check ``f(.., x_i, x_{i+1}, ..) = Q(x_i, x_{i+1}) f(.., x_{i+1}, x_i, ..)`` off Delta."""
    n = f.ndim
    mask = space.mask(n)
    if np.any(np.abs(f[~mask]) > tol):
        return False
    for i in range(n - 1):
        perm = list(range(n))
        perm[i], perm[i + 1] = perm[i + 1], perm[i]
        swapped = np.transpose(f, perm)
        rhs = _pair_factor(space.qmat, n, i, i + 1) * swapped
        if np.max(np.abs(np.where(mask, f - rhs, 0)), initial=0) > tol:
            return False
    return True


__all__ = [
    "FockSpace", "FockVector", "ResourceError", "HeadroomError",
    "project_qsym", "vacuum", "zero_vector", "from_levels", "random_vector",
    "inner", "norm", "create", "annihilate", "point_create", "point_annihilate",
    "b_apply", "qcr_residual", "qcr_residual_vectors", "mixed_defect_level1",
    "reorder_residual", "reorder_defect_level1", "exclusion_norm", "constant_symmetrization", "is_qsymmetric",
]
