"""Renormalized density moments through the Jacobi-field recursion.

A :class:`SymFock` vector holds fully symmetric tensors over grid sites
(no Delta restriction); level ``n`` stands for a sum of monomials
``f_1 . ... . f_n``.  The operator ``R(phi)`` acts on these through

    R^(phi) = a+(phi) + lambda a0(phi) + a1-(phi) + eta a2-(phi) + beta^-1 m(phi),

and ``tau(R(f_1) ... R(f_n))`` is the vacuum component of
``R^(f_1) ... R^(f_n)`` applied to the vacuum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np

from . import pointproc
from .qcore import Grid

MAX_ORDER = 6


@dataclass(frozen=True)
class DensityParams:
    """Density-state parameters derived from ``eta`` and ``kappa``.

    Parameters
    ----------
    eta : float
    kappa : float
        Positive; for ``eta < 0`` needs ``kappa^2 < 1/|eta|``.
    c : float
        Renormalization constant; the measure is rescaled by ``c``.
    """

    eta: float
    kappa: float
    c: float = 1.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa!r}")
        if self.eta < 0 and not self.kappa**2 < 1.0 / abs(self.eta):
            raise ValueError(
                f"eta = {self.eta} < 0 needs kappa^2 < {1.0 / abs(self.eta):.6g}, "
                f"got {self.kappa**2:.6g}"
            )
        if not self.c > 0:
            raise ValueError("c must be positive")

    @property
    def beta(self) -> float:
        return math.sqrt(self.eta + self.kappa**-2)

    @property
    def lam(self) -> float:
        return self.beta + self.eta / self.beta

    @property
    def scale(self) -> float:
        """``kappa sqrt(1 + eta kappa^2)``, the factor turning ``R`` into the density."""
        return self.kappa * math.sqrt(1.0 + self.eta * self.kappa**2)


@dataclass(frozen=True, eq=False)
class SymFock:
    """Levels ``0..N`` of symmetric tensors over ``n_sites`` sites; ``None`` is zero."""

    levels: tuple
    n_sites: int

    @property
    def max_level(self) -> int:
        return len(self.levels) - 1

    def __add__(self, other: SymFock) -> SymFock:
        out = []
        for a, b in zip(self.levels, other.levels):
            out.append(a if b is None else b if a is None else a + b)
        return SymFock(tuple(out), self.n_sites)

    def scaled(self, c) -> SymFock:
        return SymFock(tuple(None if f is None else c * f for f in self.levels), self.n_sites)

    def vacuum_amplitude(self) -> complex:
        f = self.levels[0]
        return 0j if f is None else complex(f)


def sym_vacuum(n_sites: int, max_level: int) -> SymFock:
    return SymFock((np.array(1.0 + 0j),) + (None,) * max_level, n_sites)


def symmetrize(tensor: np.ndarray) -> np.ndarray:
    """Average over all argument permutations."""
    from itertools import permutations

    n = tensor.ndim
    if n < 2:
        return np.asarray(tensor)
    out = sum(np.transpose(tensor, p) for p in permutations(range(n)))
    return out / math.factorial(n)


def _insert_sym(a: np.ndarray) -> np.ndarray:
    """Symmetrize ``a(z, rest)`` already symmetric in ``rest``."""
    m = a.ndim
    return sum(np.moveaxis(a, 0, i) for i in range(m)) / m


def jacobi_apply(kind: str, phi: np.ndarray, F: SymFock, w: np.ndarray) -> SymFock:
    """One of the four parts of ``R^(phi)``.

    ``create``: ``phi . f``; ``neutral``: ``sum_i phi(x_i) f``;
    ``annih1``: ``n sum_y phi(y) w(y) f(y, .)``;
    ``annih2``: ``n (n-1) Sym(phi(z) f(z, z, .))``.
    """
    phi = np.asarray(phi, dtype=complex)
    N = F.max_level
    out = [None] * (N + 1)
    for n, f in enumerate(F.levels):
        if f is None:
            continue
        if kind == "create":
            if n == N:
                if np.any(f):
                    raise ValueError(f"create needs headroom above level {N}")
                continue
            out[n + 1] = _insert_sym(np.multiply.outer(phi, f))
        elif kind == "neutral":
            if n == 0:
                continue
            acc = np.zeros_like(f)
            for i in range(n):
                shape = [1] * n
                shape[i] = phi.size
                acc = acc + phi.reshape(shape) * f
            out[n] = acc
        elif kind == "annih1":
            if n == 0:
                continue
            out[n - 1] = n * np.tensordot(phi * w, f, axes=(0, 0))
        elif kind == "annih2":
            if n < 2:
                continue
            diag = np.diagonal(f, axis1=0, axis2=1)  # rest..., z
            diag = np.moveaxis(diag, -1, 0) * phi.reshape((-1,) + (1,) * (n - 2))
            out[n - 1] = n * (n - 1) * (_insert_sym(diag) if n > 2 else diag)
        else:
            raise ValueError(f"unknown kind {kind!r}")
    return SymFock(tuple(out), F.n_sites)


def rhat_apply(phi: np.ndarray, F: SymFock, p: DensityParams, w: np.ndarray) -> SymFock:
    """``R^(phi) F``; ``w`` are the (already rescaled) site weights."""
    phi = np.asarray(phi, dtype=complex)
    out = jacobi_apply("create", phi, F, w)
    out = out + jacobi_apply("neutral", phi, F, w).scaled(p.lam)
    out = out + jacobi_apply("annih1", phi, F, w)
    if p.eta != 0:
        out = out + jacobi_apply("annih2", phi, F, w).scaled(p.eta)
    return out + F.scaled(np.sum(phi * w) / p.beta)


def tau_moment(fs: Sequence[np.ndarray], p: DensityParams, grid: Grid) -> complex:
    """``tau(R(f_1) ... R(f_n))``, the vacuum component of ``R^(f_1)...R^(f_n) Omega``."""
    n = len(fs)
    if n > MAX_ORDER:
        raise ValueError(f"n = {n} exceeds the moment cap {MAX_ORDER}")
    w = p.c * grid.site_weight
    state = sym_vacuum(grid.n_sites, n)
    for k, f in enumerate(reversed(fs)):
        state = rhat_apply(f, state, p, w)
        # levels above the remaining letter count cannot reach the vacuum
        keep = n - k - 1
        state = SymFock(tuple(x if i <= keep else None for i, x in enumerate(state.levels)),
                        state.n_sites)
    return state.vacuum_amplitude()


def rho_moment(fs: Sequence[np.ndarray], p: DensityParams, grid: Grid) -> float:
    """Density moment ``scale^n tau(R(f_1) ... R(f_n))``."""
    val = p.scale ** len(fs) * tau_moment(fs, p, grid)
    if abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
        raise ArithmeticError(f"density moment has imaginary part {val.imag!r}")
    return float(val.real)


def positivity_witness(f: np.ndarray, eta: float, grid: Grid) -> float:
    """``2 (sum f^2 w)^2 + 2 eta sum f^4 w``, the state on ``W(f . f)^2``."""
    f = np.real(np.asarray(f, dtype=complex))
    w = grid.site_weight
    return float(2 * np.sum(f**2 * w) ** 2 + 2 * eta * np.sum(f**4 * w))


def witness_from_moments(f: np.ndarray, p: DensityParams, grid: Grid) -> float:
    """``tau(W(f . f)^2)`` with ``W(f . f)`` rewritten as a polynomial in ``R``.

    ``W(f) = R(f) - m(f)/beta`` and
    ``W(f . f) = R(f) W(f) - lambda W(f^2) - m(f^2) - m(f)/beta W(f)``, so
    ``W(f . f) = R(f)^2 - 2 c1 R(f) - lambda R(f^2) + c0`` with
    ``c1 = m(f)/beta`` and ``c0 = c1^2 + lambda m(f^2)/beta - m(f^2)``.
    """
    f = np.real(np.asarray(f, dtype=complex))
    w = p.c * grid.site_weight
    f2 = f * f
    c1 = np.sum(f * w) / p.beta
    c0 = c1**2 + p.lam * np.sum(f2 * w) / p.beta - np.sum(f2 * w)
    # W = sum of coefficient * word, words are lists of smears
    poly = [(1.0, [f, f]), (-2 * c1, [f]), (-p.lam, [f2]), (c0, [])]
    total = 0.0
    for a, wa in poly:
        for b, wb in poly:
            total += a * b * tau_moment(wa + wb, p, grid).real
    return float(total)


# -- orthogonal polynomial data of the jump measure -------------------------

def kolmogorov_moments(p: DensityParams, count: int, dps: int = 60) -> list:
    """Moments ``int s^j zeta'(ds)``, ``j < count``, of ``zeta'(ds) = s^2 zeta(ds)``.

    Atoms sit at ``s_k = k / (kappa^2 beta)`` with ``zeta`` mass
    ``(1/eta) q^k / k``, ``q = eta / beta^2``; the series
    ``sum_k k^j q^k`` are summed in closed form.
    """
    if not p.eta > 0:
        raise ValueError("needs eta > 0")
    with mpmath.workdps(dps):
        eta = mpmath.mpf(p.eta)
        kappa = mpmath.mpf(p.kappa)
        beta = mpmath.sqrt(eta + kappa**-2)
        q = eta / beta**2
        unit = 1 / (kappa**2 * beta)
        return [unit ** (j + 2) / eta * mpmath.polylog(-(j + 1), q) for j in range(count)]


def chebyshev_recurrence(moments: list, n: int, dps: int = 60):
    """Monic recurrence ``s p_k = p_{k+1} + b_k p_k + a_k p_{k-1}`` from moments.

    Classical Chebyshev algorithm; needs ``2 n`` moments.  Returns lists
    ``b[0..n-1]`` and ``a[0..n-1]`` with ``a[0] = moments[0]``.
    """
    if len(moments) < 2 * n:
        raise ValueError(f"need {2 * n} moments, got {len(moments)}")
    with mpmath.workdps(dps):
        mu = [mpmath.mpf(m) for m in moments]
        sig_prev = [mpmath.mpf(0)] * (2 * n)
        sig = list(mu)
        b = [mu[1] / mu[0]]
        a = [mu[0]]
        for k in range(1, n):
            nxt = [mpmath.mpf(0)] * (2 * n)
            for l in range(k, 2 * n - k):
                nxt[l] = sig[l + 1] - b[k - 1] * sig[l] - a[k - 1] * sig_prev[l]
            b.append(nxt[k + 1] / nxt[k] - sig[k] / sig[k - 1])
            a.append(nxt[k] / sig[k - 1])
            sig_prev, sig = sig, nxt
        return b, a


def hankel_condition(moments: list, size: int, dps: int = 60) -> float:
    with mpmath.workdps(dps):
        H = mpmath.matrix(size, size)
        for i in range(size):
            for j in range(size):
                H[i, j] = moments[i + j]
        return float(mpmath.cond(H))


@dataclass(frozen=True)
class MeixnerResult:
    b: list
    a: list
    total_mass: float
    hankel_cond: float


def meixner_coeffs(p: DensityParams, kmax: int) -> MeixnerResult:
    """Recover ``(a_k, b_k)``, ``k = 0..kmax``, for the Kolmogorov measure."""
    if not p.eta > 0:
        raise ValueError("meixner_coeffs needs eta > 0")
    if not 0 <= kmax <= 5:
        raise ValueError("kmax must be in 0..5")
    n = kmax + 1
    mu = kolmogorov_moments(p, 2 * n + 1)
    cond = hankel_condition(mu, n + 1)
    if not math.isfinite(cond) or cond > 1e40:
        raise ArithmeticError(f"Hankel system is singular, condition number {cond:.3g}")
    b, a = chebyshev_recurrence(mu, n)
    return MeixnerResult([float(x) for x in b], [float(x) for x in a], float(mu[0]), cond)


# -- large-kappa limit ------------------------------------------------------

def gamma_limit_check(f: np.ndarray, eta: float, n: int, kappas: Sequence[float], grid: Grid):
    """Gaps ``|tau_kappa(R(f)^n) - E <f, gamma>^n|`` along a kappa sweep.

    Returns ``(gaps, gamma_moment)``.
    """
    if not eta > 0:
        raise ValueError("gamma_limit_check needs eta > 0")
    if not 1 <= n <= 4:
        raise ValueError("n must be in 1..4")
    model = pointproc.build_levy("gamma", eta)
    target = pointproc.exact_joint_moment([f] * n, model, grid)
    gaps = []
    for kappa in kappas:
        val = tau_moment([f] * n, DensityParams(eta, kappa), grid).real
        gaps.append(abs(val - target))
    return gaps, target


__all__ = [
    "DensityParams", "SymFock", "sym_vacuum", "symmetrize", "jacobi_apply",
    "rhat_apply", "tau_moment", "rho_moment", "positivity_witness",
    "witness_from_moments", "kolmogorov_moments", "chebyshev_recurrence",
    "hankel_condition", "MeixnerResult", "meixner_coeffs", "gamma_limit_check",
]
