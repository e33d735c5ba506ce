"""INI experiment configuration for the suite runner."""
from __future__ import annotations

import configparser
import math
import os
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .qcore import Grid, QKernel

SEED_ENV = "ANYONFOCK_SEED"
DEFAULT_SEED = 20261016


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.replace(";", ",").split(",") if x.strip())


@dataclass
class ExperimentConfig:
    # [grid]
    m: int = 4
    fiber_dim: int = 1
    total_mass: float = 1.0
    coords: tuple | None = None
    weights: tuple | None = None
    # [kernel]
    q: str = "2/7"
    eta: float | None = None
    # [fock]
    max_level: int = 4
    factorial_cap: int = 8
    max_entries: int = 10**7
    # [qcr]
    halvings: int = 2
    # [exclusion]
    exclusion_m: int = 5
    orders: tuple = (2, 3, 4)
    # [quasifree]
    qf_kappa: float = 0.8
    # [density]
    density_etas: tuple = (0.0, 0.5, 1.0)
    density_kappas: tuple = (0.5, 1.0, 2.0)
    density_nmax: int = 5
    meixner_points: tuple = ((0.5, 1.0), (1.0, 2.0))
    # [pointproc]
    pp_eta: float = 0.5
    pp_kappa: float = 1.0
    # [gamma]
    gamma_etas: tuple = (0.5, 1.0)
    gamma_kappas: tuple = (10.0, 100.0, 1000.0)
    gamma_nmax: int = 3
    # [run]
    seed: int = DEFAULT_SEED
    samples: int = 1_000_000
    cases: int = 10
    extra: dict = field(default_factory=dict, repr=False)

    def kernel(self, q: str | None = None) -> QKernel:
        frac = parse_angle(self.q if q is None else q)
        return QKernel.from_angle(frac.numerator, frac.denominator, self.eta)

    def grid(self) -> Grid:
        if self.coords is not None or self.weights is not None:
            coords = self.coords or tuple(range(1, len(self.weights) + 1))
            weights = self.weights or (self.total_mass / len(coords),) * len(coords)
            return Grid(coords, weights, self.fiber_dim)
        return Grid.uniform(self.m, self.total_mass, self.fiber_dim)

    def echo(self) -> dict:
        out = asdict(self)
        out.pop("extra")
        return out

    def validate(self):
        def need(cond, name, msg):
            if not cond:
                raise ConfigError(f"{name}: {msg}")

        need(self.m >= 1, "grid.m", "must be >= 1")
        need(self.fiber_dim >= 1, "grid.fiber_dim", "must be >= 1")
        need(self.total_mass > 0, "grid.total_mass", "must be positive")
        try:
            self.grid()
        except ValueError as exc:
            raise ConfigError(f"grid: {exc}") from None
        try:
            self.kernel()
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"kernel.q: {exc}") from None
        need(self.eta is None or math.isfinite(self.eta), "kernel.eta", "must be finite")
        need(2 <= self.max_level <= 8, "fock.max_level", "must be in 2..8")
        need(1 <= self.factorial_cap <= 10, "fock.factorial_cap", "must be in 1..10")
        need(self.max_entries >= 1, "fock.max_entries", "must be positive")
        need(self.halvings >= 1, "qcr.halvings", "must be >= 1")
        need(self.exclusion_m >= 1, "exclusion.m", "must be >= 1")
        need(all(k >= 2 for k in self.orders), "exclusion.orders", "orders must be >= 2")
        need(self.qf_kappa > 0, "quasifree.kappa", "must be positive")
        need(all(e >= 0 for e in self.density_etas), "density.etas", "must be >= 0")
        need(all(k > 0 for k in self.density_kappas), "density.kappas", "must be positive")
        need(1 <= self.density_nmax <= 6, "density.nmax", "must be in 1..6")
        need(all(e > 0 and k > 0 for e, k in self.meixner_points), "density.meixner",
             "needs eta > 0 and kappa > 0")
        need(self.pp_eta > 0 and self.pp_kappa > 0, "pointproc", "eta and kappa must be positive")
        need(all(e > 0 for e in self.gamma_etas), "gamma.etas", "must be positive")
        need(len(self.gamma_kappas) >= 2 and all(k > 0 for k in self.gamma_kappas),
             "gamma.kappas", "needs at least two positive values")
        need(1 <= self.gamma_nmax <= 4, "gamma.nmax", "must be in 1..4")
        need(0 <= self.seed < 2**64, "run.seed", "must fit in an unsigned 64-bit integer")
        need(self.samples >= 100, "run.samples", "must be >= 100")
        need(self.cases >= 1, "run.cases", "must be >= 1")
        return self


def parse_angle(text: str) -> Fraction:
    """``"p/k"`` meaning ``q = exp(2 pi i p / k)``."""
    try:
        frac = Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"q must be a rational angle p/k, got {text!r}") from None
    return frac


# (section, key) -> (attribute, parser)
_FIELDS = {
    ("grid", "m"): ("m", int),
    ("grid", "fiber_dim"): ("fiber_dim", int),
    ("grid", "total_mass"): ("total_mass", float),
    ("grid", "coords"): ("coords", _floats),
    ("grid", "weights"): ("weights", _floats),
    ("kernel", "q"): ("q", str),
    ("kernel", "eta"): ("eta", float),
    ("fock", "max_level"): ("max_level", int),
    ("fock", "factorial_cap"): ("factorial_cap", int),
    ("fock", "max_entries"): ("max_entries", lambda s: int(float(s))),
    ("qcr", "halvings"): ("halvings", int),
    ("exclusion", "m"): ("exclusion_m", int),
    ("exclusion", "orders"): ("orders", _ints),
    ("quasifree", "kappa"): ("qf_kappa", float),
    ("density", "etas"): ("density_etas", _floats),
    ("density", "kappas"): ("density_kappas", _floats),
    ("density", "nmax"): ("density_nmax", int),
    ("density", "meixner"): (
        "meixner_points",
        lambda s: tuple(tuple(float(v) for v in pt.split(":")) for pt in s.split(",") if pt.strip()),
    ),
    ("pointproc", "eta"): ("pp_eta", float),
    ("pointproc", "kappa"): ("pp_kappa", float),
    ("gamma", "etas"): ("gamma_etas", _floats),
    ("gamma", "kappas"): ("gamma_kappas", _floats),
    ("gamma", "nmax"): ("gamma_nmax", int),
    ("run", "seed"): ("seed", int),
    ("run", "samples"): ("samples", lambda s: int(float(s))),
    ("run", "cases"): ("cases", int),
}


def load_config(path: str | None = None, seed: int | None = None) -> ExperimentConfig:
    """Read an INI file, then apply the environment and ``seed`` overrides.

    Precedence for the seed: explicit ``seed`` argument, then
    ``ANYONFOCK_SEED``, then the file, then the default.
    """
    cfg = ExperimentConfig()
    if path is not None:
        parser = configparser.ConfigParser()
        with open(path) as fh:
            parser.read_file(fh)
        for section in parser.sections():
            for key, raw in parser.items(section):
                if (section, key) not in _FIELDS:
                    raise ConfigError(f"{section}.{key}: unknown field")
                attr, conv = _FIELDS[(section, key)]
                try:
                    setattr(cfg, attr, conv(raw))
                except (ValueError, TypeError) as exc:
                    raise ConfigError(f"{section}.{key}: cannot parse {raw!r} ({exc})") from None
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            cfg.seed = int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}: not an integer: {env!r}") from None
    if seed is not None:
        cfg.seed = seed
    return cfg.validate()
