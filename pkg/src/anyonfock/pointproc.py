"""Completely random measures on grid cells: Levy data, samplers, exact moments.

Each grid site is an independent cell of mass ``w``.  The three laws are

* ``poisson``: counts Poisson(kappa^2 w),
* ``negbin``: counts negative binomial with ``r = w / eta`` and
  ``p = eta / (eta + kappa^-2)``, the compound Poisson law of
  logarithmic-series jumps,
* ``gamma``: masses Gamma(shape ``w / eta``, scale ``sqrt(eta)``).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np
from scipy import stats
from sympy.utilities.iterables import multiset_partitions

from .qcore import Grid

KINDS = ("poisson", "negbin", "gamma")
TAIL_REL = 1e-14
MAX_MOMENT_ORDER = 6
BLOCK = 1 << 16


@dataclass(frozen=True)
class LevyModel:
    """Jump-size measure ``zeta`` of one of the three laws.

    For discrete kinds ``atoms`` is an array of rows ``(s, zeta({s}))``
    truncated once an atom falls below ``TAIL_REL`` of the total mass.
    """

    kind: str
    kappa: float
    eta: float = 0.0
    atoms: np.ndarray | None = field(default=None, repr=False)
    truncated_mass: float = 0.0
    infinite_activity: bool = False

    @property
    def p(self) -> float:
        """Logarithmic-series parameter ``eta / (eta + kappa^-2)``."""
        return self.eta / (self.eta + self.kappa**-2)

    @property
    def total_mass(self) -> float:
        if self.kind == "poisson":
            return self.kappa**2
        if self.kind == "negbin":
            return -math.log1p(-self.p) / self.eta
        return math.inf

    def zeta_moment(self, j: int) -> float:
        """``int s^j zeta(ds)`` for ``j >= 1``, from closed forms."""
        if j < 1:
            raise ValueError("moment order must be >= 1")
        if self.kind == "poisson":
            return self.kappa**2
        if self.kind == "gamma":
            return math.factorial(j - 1) * self.eta ** (j / 2 - 1)
        # sum_k k^(j-1) p^k is the polylogarithm of order 1 - j
        val = float(mpmath.polylog(1 - j, self.p)) / self.eta
        if not math.isfinite(val):
            raise OverflowError(f"zeta moment of order {j} overflows")
        return val

    def density(self, s):
        """Levy density of the gamma kind, ``exp(-s / sqrt(eta)) / (s eta)``."""
        if self.kind != "gamma":
            raise ValueError("only the gamma kind has a Levy density")
        s = np.asarray(s, dtype=float)
        return np.exp(-s / math.sqrt(self.eta)) / (s * self.eta)


def build_levy(kind: str, eta: float = 0.0, kappa: float = 1.0) -> LevyModel:
    """Levy measure for ``kind`` in ``{"poisson", "negbin", "gamma"}``."""
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}, expected one of {KINDS}")
    if kind == "poisson":
        if not kappa > 0:
            raise ValueError("kappa must be positive")
        return LevyModel("poisson", kappa, 0.0, np.array([[1.0, kappa**2]]))
    if not eta > 0:
        raise ValueError(f"{kind} needs eta > 0, got {eta!r}")
    if kind == "gamma":
        return LevyModel("gamma", kappa, eta, None, infinite_activity=True)
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    model = LevyModel("negbin", kappa, eta)
    p, total = model.p, model.total_mass
    rows = []
    k = 1
    while True:
        mass = p**k / (k * eta)
        if mass < TAIL_REL * total:
            break
        rows.append((float(k), mass))
        k += 1
    atoms = np.array(rows)
    return LevyModel("negbin", kappa, eta, atoms, max(total - atoms[:, 1].sum(), 0.0))


def negbin_pmf(k, w: float, model: LevyModel) -> np.ndarray:
    """Per-cell law ``(1 + eta kappa^2)^(-w/eta) (w/eta)_k / k! p^k``."""
    r = w / model.eta
    k = np.asarray(k)
    return stats.nbinom.pmf(k, r, 1.0 - model.p)


# -- sampling ---------------------------------------------------------------

@dataclass(frozen=True)
class PointConfiguration:
    """Sampled cell masses, one row per replicate and one column per cell."""

    masses: np.ndarray
    kind: str
    seed: int
    method: str

    @property
    def n_replicates(self) -> int:
        return self.masses.shape[0]

    def pair(self, f: np.ndarray) -> np.ndarray:
        """``<f, gamma>`` for every replicate."""
        return self.masses @ np.asarray(f, dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["replicate", "cell_index", "mass"])
        for r, row in enumerate(self.masses):
            for c, m in enumerate(row):
                wr.writerow([r, c, repr(float(m)) if self.kind == "gamma" else int(m)])
        return buf.getvalue()

    def to_json(self) -> str:
        masses = self.masses.tolist() if self.kind == "gamma" else self.masses.astype(int).tolist()
        return json.dumps(
            {"kind": self.kind, "seed": self.seed, "method": self.method, "masses": masses},
            sort_keys=True,
        )


def _streams(seed: int, n_cells: int, n_blocks: int):
    """Philox generators keyed by ``(cell, block)``."""
    root = np.random.SeedSequence(seed)
    cells = root.spawn(n_cells)
    return [[np.random.Generator(np.random.Philox(s)) for s in c.spawn(n_blocks)] for c in cells]


def _draw(model: LevyModel, w: float, n: int, rng: np.random.Generator, method: str) -> np.ndarray:
    if model.kind == "poisson":
        return rng.poisson(model.kappa**2 * w, size=n).astype(float)
    if model.kind == "gamma":
        return rng.gamma(w / model.eta, math.sqrt(model.eta), size=n)
    if method == "direct":
        return rng.negative_binomial(w / model.eta, 1.0 - model.p, size=n).astype(float)
    # compound Poisson: jump count, then logarithmic-series jump sizes
    counts = rng.poisson(w * model.total_mass, size=n)
    jumps = rng.logseries(model.p, size=int(counts.sum()))
    owner = np.repeat(np.arange(n), counts)
    return np.bincount(owner, weights=jumps, minlength=n)


def sample(grid: Grid, model: LevyModel, seed: int, n_samples: int = 1,
           method: str = "compound") -> PointConfiguration:
    """Draw ``n_samples`` independent configurations, deterministic in ``seed``.

    Every (cell, block of ``BLOCK`` replicates) pair has its own Philox
    stream, so the result does not depend on how the work is split.
    ``method`` picks the negbin route: ``"compound"`` or ``"direct"``.
    """
    if method not in ("compound", "direct"):
        raise ValueError(f"unknown method {method!r}")
    n_blocks = -(-n_samples // BLOCK)
    streams = _streams(seed, grid.n_sites, n_blocks)
    out = np.empty((n_samples, grid.n_sites))
    for c, w in enumerate(grid.site_weight):
        for b in range(n_blocks):
            lo, hi = b * BLOCK, min((b + 1) * BLOCK, n_samples)
            out[lo:hi, c] = _draw(model, float(w), hi - lo, streams[c][b], method)
    return PointConfiguration(out, model.kind, seed, method if model.kind == "negbin" else "marginal")


# -- exact side -------------------------------------------------------------

def set_partitions(n: int):
    """All set partitions of ``range(n)`` as lists of blocks."""
    if n == 0:
        yield []
        return
    yield from multiset_partitions(list(range(n)))


def block_cumulant(fs: Sequence[np.ndarray], block, model: LevyModel, grid: Grid) -> float:
    prod = np.ones(grid.n_sites)
    for i in block:
        prod = prod * np.asarray(fs[i], dtype=float)
    return float(np.sum(prod * grid.site_weight)) * model.zeta_moment(len(block))


def exact_joint_moment(fs: Sequence[np.ndarray], model: LevyModel, grid: Grid) -> float:
    """``E prod_i <f_i, gamma>`` as a sum over set partitions of block cumulants."""
    n = len(fs)
    if n > MAX_MOMENT_ORDER:
        raise ValueError(f"n = {n} exceeds the moment cap {MAX_MOMENT_ORDER}")
    fs = [np.real(np.asarray(f)) for f in fs]
    total = 0.0
    for part in set_partitions(n):
        total += math.prod(block_cumulant(fs, b, model, grid) for b in part)
    return total


def empirical_moment(fs: Sequence[np.ndarray], config: PointConfiguration) -> tuple[float, float]:
    """Monte-Carlo mean of ``prod_i <f_i, gamma>`` and its standard error."""
    vals = np.ones(config.n_replicates)
    for f in fs:
        vals = vals * config.pair(f)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size))


def laplace_exact(f: np.ndarray, model: LevyModel, grid: Grid) -> float:
    """``E exp <f, gamma>`` from the Levy-Khintchine exponent, cell by cell."""
    f = np.real(np.asarray(f, dtype=complex))
    w = grid.site_weight
    if model.kind == "poisson":
        expo = np.sum(w * model.kappa**2 * np.expm1(f))
    elif model.kind == "negbin":
        p = model.p
        expo = np.sum(w / model.eta * (np.log1p(-p) - np.log1p(-p * np.exp(f))))
    else:
        expo = -np.sum(w / model.eta * np.log1p(-math.sqrt(model.eta) * f))
    return float(np.exp(expo))


def laplace_check(f: np.ndarray, model: LevyModel, grid: Grid, nsamples: int, seed: int):
    """Empirical versus exact Laplace transform at ``f <= 0``.

    Returns ``(empirical, exact, gap, standard_error)``.
    """
    f = np.real(np.asarray(f, dtype=complex))
    if np.any(f > 0):
        raise ValueError("laplace_check needs f <= 0 everywhere")
    config = sample(grid, model, seed, nsamples)
    vals = np.exp(config.pair(f))
    emp = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(nsamples))
    exact = laplace_exact(f, model, grid)
    return emp, exact, abs(emp - exact), se


def total_variation(counts: np.ndarray, pmf: np.ndarray) -> float:
    """TV distance between an empirical count histogram and a pmf on ``0..K``.

    Mass of the pmf beyond ``K`` counts toward the distance.
    """
    emp = counts / counts.sum()
    K = max(emp.size, pmf.size)
    e = np.zeros(K)
    e[:emp.size] = emp
    q = np.zeros(K)
    q[:pmf.size] = pmf
    return 0.5 * (np.abs(e - q).sum() + max(0.0, 1.0 - pmf.sum()))


__all__ = [
    "LevyModel", "PointConfiguration", "build_levy", "negbin_pmf", "sample",
    "set_partitions", "exact_joint_moment", "empirical_moment", "laplace_exact",
    "laplace_check", "total_variation",
]
