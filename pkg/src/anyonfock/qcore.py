"""Discretized base space, twist kernel and permutation weights.

The continuum plane collapses to an ordered axis of cells times a finite
fiber.  A site is a pair ``(axis index, fiber index)`` stored flat as
``axis * fiber_dim + fiber``.  The twist kernel only looks at the axis
coordinate, and two sites sharing an axis index are "Delta-related".
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

UNIT_TOL = 1e-12


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class QKernel:
    """Anyon twist ``Q(s, t)``: ``q`` below, ``conj(q)`` above, ``eta`` on ties."""

    q: complex
    eta: float | None = None

    def __post_init__(self):
        q = complex(self.q)
        if abs(abs(q) - 1.0) > UNIT_TOL:
            raise ValueError(f"|q| must be 1, got |q| = {abs(q)!r}")
        object.__setattr__(self, "q", q)
        eta = q.real if self.eta is None else self.eta
        if isinstance(eta, complex) or not math.isfinite(float(eta)):
            raise ValueError("eta must be a finite real number")
        object.__setattr__(self, "eta", float(eta))

    @classmethod
    def from_angle(cls, p: int, k: int, eta: float | None = None) -> QKernel:
        """Kernel for ``q = exp(2 pi i p / k)``, snapping exact quarter turns."""
        p %= k
        if 4 * p % k == 0:
            q = (1, 1j, -1, -1j)[4 * p // k]
        else:
            q = cmath.exp(2j * math.pi * p / k)
        return cls(complex(q), eta)

    def __call__(self, s, t) -> complex:
        return kernel_eval(self, s, t)

    def is_root_of_unity(self, k: int, tol: float = UNIT_TOL) -> bool:
        """True if ``q**k == 1`` and ``q != 1`` within ``tol``."""
        return abs(self.q**k - 1) <= tol and abs(self.q - 1) > tol

    def site_matrix(self, axis: np.ndarray) -> np.ndarray:
        """``Q`` evaluated on every ordered pair of sites with axis positions ``axis``."""
        axis = np.asarray(axis)
        lt = axis[:, None] < axis[None, :]
        gt = axis[:, None] > axis[None, :]
        out = np.full((axis.size, axis.size), complex(self.eta))
        out[lt] = self.q
        out[gt] = self.q.conjugate()
        return out


def kernel_eval(kernel: QKernel, s, t) -> complex:
    if s < t:
        return kernel.q
    if s > t:
        return kernel.q.conjugate()
    return complex(kernel.eta)


def inversions(pi: Sequence[int]):
    """Yield the index pairs ``i < j`` with ``pi[i] > pi[j]``."""
    n = len(pi)
    for i in range(n):
        for j in range(i + 1, n):
            if pi[i] > pi[j]:
                yield i, j


def q_pi(kernel: QKernel, coords: Sequence, pi: Sequence[int]) -> complex:
    """Product of ``Q(coords[i], coords[j])`` over the inversions of ``pi``.

    ``pi`` is a zero-based permutation tuple.
    """
    if len(coords) != len(pi):
        raise ValueError(f"coords has length {len(coords)} but pi has size {len(pi)}")
    if sorted(pi) != list(range(len(pi))):
        raise ValueError(f"{pi!r} is not a permutation of 0..{len(pi) - 1}")
    out = 1 + 0j
    for i, j in inversions(pi):
        out *= kernel_eval(kernel, coords[i], coords[j])
    return out


@dataclass(frozen=True)
class Grid:
    """Ordered axis cells with masses, each carrying ``fiber_dim`` sites.

    Parameters
    ----------
    axis_coords : sequence of float
        Strictly increasing axis positions, one per cell.
    weights : sequence of float
        Positive cell masses.
    fiber_dim : int
        Transverse sites per cell.
    """

    axis_coords: tuple
    weights: tuple
    fiber_dim: int = 1
    _site_axis: np.ndarray = field(init=False, repr=False, compare=False)
    _site_weight: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        coords = tuple(float(c) for c in self.axis_coords)
        weights = tuple(float(w) for w in self.weights)
        if len(coords) == 0:
            raise GridError("grid needs at least one axis cell")
        if len(coords) != len(weights):
            raise GridError(
                f"{len(coords)} axis coordinates but {len(weights)} weights"
            )
        if any(b <= a for a, b in zip(coords, coords[1:])):
            raise GridError("axis_coords must be strictly increasing")
        if any(not (w > 0 and math.isfinite(w)) for w in weights):
            raise GridError("weights must be positive and finite")
        if int(self.fiber_dim) != self.fiber_dim or self.fiber_dim < 1:
            raise GridError(f"fiber_dim must be a positive integer, got {self.fiber_dim!r}")
        object.__setattr__(self, "axis_coords", coords)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "fiber_dim", int(self.fiber_dim))
        axis = np.repeat(np.arange(len(coords)), self.fiber_dim)
        axis.setflags(write=False)
        site_w = np.asarray(weights)[axis]
        site_w.setflags(write=False)
        object.__setattr__(self, "_site_axis", axis)
        object.__setattr__(self, "_site_weight", site_w)

    @classmethod
    def uniform(cls, m: int, total_mass: float = 1.0, fiber_dim: int = 1) -> Grid:
        """``m`` cells at coordinates ``1..m`` sharing ``total_mass`` equally."""
        if m < 1:
            raise GridError("need at least one cell")
        return cls(tuple(range(1, m + 1)), (total_mass / m,) * m, fiber_dim)

    @property
    def n_axis(self) -> int:
        return len(self.axis_coords)

    @property
    def n_sites(self) -> int:
        return self.n_axis * self.fiber_dim

    @property
    def site_axis(self) -> np.ndarray:
        """Axis index of each site."""
        return self._site_axis

    @property
    def site_weight(self) -> np.ndarray:
        return self._site_weight

    @property
    def site_coords(self) -> np.ndarray:
        return np.asarray(self.axis_coords)[self._site_axis]

    @property
    def total_mass(self) -> float:
        return float(sum(self.weights))

    def cell_midpoints(self) -> np.ndarray:
        """Mass-coordinate midpoint of each axis cell, in ``[0, total_mass]``."""
        w = np.asarray(self.weights)
        return np.cumsum(w) - w / 2

    def refined(self) -> Grid:
        """Split every cell into two halves of equal mass.

        Coordinates of the children are their mass midpoints, which keeps
        the axis order of the parent cells.
        """
        w = np.asarray(self.weights)
        left = np.cumsum(w) - w
        child_w = np.repeat(w / 2, 2)
        child_mid = np.empty(2 * w.size)
        child_mid[0::2] = left + w / 4
        child_mid[1::2] = left + 3 * w / 4
        return Grid(tuple(child_mid), tuple(child_w), self.fiber_dim)

    def sample(self, func: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
        """Evaluate ``func(u, fiber)`` at each site's cell midpoint and fiber index."""
        u = self.cell_midpoints()[self._site_axis]
        fib = np.tile(np.arange(self.fiber_dim), self.n_axis)
        return np.asarray(func(u, fib), dtype=complex) * np.ones(self.n_sites)

    def off_delta_mask(self, n: int) -> np.ndarray:
        """Boolean order-``n`` array, True where all ``n`` sites have distinct axis."""
        return off_delta_mask(self._site_axis, n)

    def indicator(self, axis_index: int, fiber: int | None = None) -> np.ndarray:
        out = np.zeros(self.n_sites, dtype=complex)
        sel = self._site_axis == axis_index
        if fiber is not None:
            sel &= np.tile(np.arange(self.fiber_dim), self.n_axis) == fiber
        out[sel] = 1.0
        return out


def off_delta_mask(site_axis: np.ndarray, n: int) -> np.ndarray:
    site_axis = np.asarray(site_axis)
    s = site_axis.size
    mask = np.ones((s,) * n, dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            shape_i = [1] * n
            shape_j = [1] * n
            shape_i[i] = s
            shape_j[j] = s
            mask &= site_axis.reshape(shape_i) != site_axis.reshape(shape_j)
    return mask


def weight_tensor(site_weight: np.ndarray, n: int) -> np.ndarray:
    """Product measure ``w(x_1) ... w(x_n)`` as an order-``n`` array."""
    out = np.ones(())
    for _ in range(n):
        out = np.multiply.outer(out, site_weight)
    return out


def integrate(grid: Grid, tensor) -> complex:
    """Discrete ``integral f dm^{(x)k}``: weighted sum over all site tuples."""
    tensor = np.asarray(tensor)
    if any(d != grid.n_sites for d in tensor.shape):
        raise ValueError(
            f"tensor shape {tensor.shape} does not match {grid.n_sites} sites"
        )
    out = tensor
    for _ in range(tensor.ndim):
        out = np.tensordot(grid.site_weight, out, axes=(0, 0))
    return complex(out)
