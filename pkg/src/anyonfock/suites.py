"""Named verification suites: each returns check records plus data tables."""
from __future__ import annotations

import cmath
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import density as dens
from . import pointproc as pp
from . import qfock as qf
from . import quasifree as qfree
from .config import ExperimentConfig
from .qcore import Grid, QKernel

SUITES = ("qcr", "exclusion", "quasifree", "density", "pointproc", "gamma-limit")
_TAGS = {name: i for i, name in enumerate(SUITES)}


@dataclass
class Record:
    """One check.  ``comparison`` says how ``computed`` is judged.

    ``abs``: ``|computed - expected| <= tolerance``; ``rel``: same divided by
    ``|expected|``; ``max``: ``computed <= tolerance``; ``min``:
    ``computed >= -tolerance``; ``flag``: ``computed`` is the verdict.
    Informational records are reported but do not enter the verdict.
    """

    name: str
    computed: object
    expected: object
    tolerance: float
    comparison: str
    passed: bool
    informational: bool = False
    note: str = ""


def close(name, computed, expected, tol, rel=False, **kw) -> Record:
    gap = abs(complex(computed) - complex(expected))
    if rel:
        gap /= max(abs(complex(expected)), 1e-300)
    return Record(name, computed, expected, tol, "rel" if rel else "abs", bool(gap <= tol), **kw)


def at_most(name, value, bound, **kw) -> Record:
    return Record(name, float(value), 0.0, bound, "max", bool(value <= bound), **kw)


def at_least(name, value, tol, **kw) -> Record:
    return Record(name, float(value), 0.0, tol, "min", bool(value >= -tol), **kw)


def flag(name, ok, computed=None, expected=None, **kw) -> Record:
    return Record(name, computed if computed is not None else bool(ok), expected, 0.0,
                  "flag", bool(ok), **kw)


def within_se(name, emp, exact, se, k=4.0, **kw) -> Record:
    return Record(name, emp, exact, k * se, "abs", bool(abs(emp - exact) <= k * se),
                  note=f"{k:g} standard errors", **kw)


@dataclass
class SuiteResult:
    suite: str
    records: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records if not r.informational)

    def add(self, *recs):
        self.records.extend(recs)

    def table(self, name, columns):
        self.tables[name] = {"columns": list(columns), "rows": []}
        return self.tables[name]["rows"]

    @contextmanager
    def timed(self, label):
        t0 = time.perf_counter()
        yield
        self.timings[label] = time.perf_counter() - t0


def _rng(cfg: ExperimentConfig, suite: str) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, _TAGS[suite]])


def _rc(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


# -- qcr --------------------------------------------------------------------

def _smooth(grid: Grid, which: int) -> np.ndarray:
    """Fixed continuum test functions sampled at mass midpoints."""
    funcs = (
        lambda u, c: np.exp(3j * u) + u + 0.3 * c,
        lambda u, c: np.cos(2 * u) + 0.5j + 0.2j * c,
        lambda u, c: 1 + u**2 - 0.4 * c,
        lambda u, c: np.sin(3 * u + 1) + 1j * np.cos(2 * u) + 0.1 * c,
    )
    return grid.sample(funcs[which])


def suite_qcr(cfg: ExperimentConfig) -> SuiteResult:
    res = SuiteResult("qcr")
    rng = _rng(cfg, "qcr")
    kernel = cfg.kernel()
    grid = cfg.grid()
    space = qf.FockSpace.from_grid(kernel, grid, factorial_cap=cfg.factorial_cap,
                                   max_entries=cfg.max_entries)
    S = space.n_sites
    N = cfg.max_level

    with res.timed("exchange"):
        worst = [0.0, 0.0, 0.0]
        for _ in range(cfg.cases):
            F = qf.random_vector(space, rng, range(N - 1), N)
            r = qf.qcr_residual(_rc(rng, S), _rc(rng, S), F)
            worst = [max(a, b) for a, b in zip(worst, r)]
        res.add(at_most("exchange_creators_residual", worst[0], 1e-10),
                at_most("exchange_annihilators_residual", worst[1], 1e-10),
                flag("mixed_residual_nonzero_on_grid", worst[2] > 0, worst[2],
                     informational=True, note="expected: discrete Delta defect"))

    with res.timed("mixed"):
        vac = qf.vacuum(space, 2)
        res.add(at_most("mixed_residual_vacuum",
                        qf.qcr_residual(_rc(rng, S), _rc(rng, S), vac)[2], 1e-12))
        worst = 0.0
        for _ in range(cfg.cases):
            f, g, h = _rc(rng, S), _rc(rng, S), _rc(rng, S)
            F = qf.from_levels(space, [None, f], 3)
            r = qf.qcr_residual_vectors(g, h, F)[2]
            oracle = qf.mixed_defect_level1(space, g, h, f)
            gap = np.abs(r.level(1) - oracle).max()
            rest = max((np.abs(x).max() for n, x in enumerate(r.levels) if n != 1 and x is not None),
                       default=0.0)
            worst = max(worst, gap, rest)
        res.add(at_most("mixed_defect_matches_oracle_level1", worst, 1e-12))

    with res.timed("scaling"):
        rows = res.table("qcr_scaling", ["refinements", "max_weight", "residual", "ratio"])
        g_ = grid
        prev = None
        for level in range(cfg.halvings + 1):
            sp = qf.FockSpace.from_grid(kernel, g_)
            F = qf.from_levels(sp, [None, _smooth(g_, 2)], 3)
            r = qf.qcr_residual(_smooth(g_, 0), _smooth(g_, 1), F)[2]
            ratio = r / prev if prev else float("nan")
            rows.append([level, max(g_.weights), r, ratio])
            if prev:
                res.add(close(f"mixed_residual_ratio_refinement_{level}", ratio, 0.5, 0.1))
            prev = r
            g_ = g_.refined()

    with res.timed("intertwining"):
        worst_p = worst_m = 0.0
        for n in (1, 2, 3):
            for _ in range(cfg.cases):
                t, h = _rc(rng, *(S,) * n), _rc(rng, S)
                Pt = qf.project_qsym(space, t)
                lhs = qf.project_qsym(space, qf.b_apply(space, "+", h, t))
                rhs = qf.create(h, qf.FockVector(space, (None,) * n + (Pt, None))).level(n + 1)
                worst_p = max(worst_p, np.abs(lhs - rhs).max())
                bm = qf.b_apply(space, "-", np.conj(h), t)
                lhs = qf.project_qsym(space, bm) if n > 1 else bm
                rhs = qf.annihilate(h, qf.FockVector(space, (None,) * n + (Pt,))).level(n - 1)
                worst_m = max(worst_m, np.abs(lhs - rhs).max())
        res.add(at_most("intertwining_creation", worst_p, 1e-10),
                at_most("intertwining_annihilation", worst_m, 1e-10))

    with res.timed("reorder"):
        res.add(at_most("reorder_relation_vacuum",
                        qf.norm(qf.reorder_residual(_rc(rng, S), _rc(rng, S), qf.vacuum(space, 2))),
                        1e-10))
        worst = 0.0
        for _ in range(cfg.cases):
            f, h1, h2 = _rc(rng, S), _rc(rng, S), _rc(rng, S)
            r = qf.reorder_residual(h1, h2, qf.from_levels(space, [None, f], 2))
            worst = max(worst, np.abs(r.level(1) - qf.reorder_defect_level1(space, h1, h2, f)).max())
        res.add(at_most("reorder_defect_matches_oracle_level1", worst, 1e-12))
    return res


# -- exclusion --------------------------------------------------------------

def q_factorial_over_factorial(q: complex, k: int) -> complex:
    """``prod_{j<=k} (1 + q + ... + q^(j-1)) / k!``, the inversion generating function."""
    return math.prod(sum(q**i for i in range(j)) for j in range(1, k + 1)) / math.factorial(k)


def stated_constant(q: complex, k: int) -> complex:
    """Closed form ``(1 - q^k) / ((1 - q) k!)`` as stated for the constant function."""
    return (1 - q**k) / ((1 - q) * math.factorial(k))


def suite_exclusion(cfg: ExperimentConfig) -> SuiteResult:
    res = SuiteResult("exclusion")
    rng = _rng(cfg, "exclusion")
    grid = Grid.uniform(cfg.exclusion_m, cfg.total_mass)
    S = grid.n_sites
    rows = res.table("exclusion_norms", ["k", "route", "max_norm"])
    for k in cfg.orders:
        kernel = QKernel.from_angle(1, k, cfg.eta)
        space = qf.FockSpace.from_grid(kernel, grid)
        with res.timed(f"fock_k{k}"):
            worst = max(qf.exclusion_norm(kernel, _rc(rng, S), k, qf.vacuum(space, k))
                        for _ in range(cfg.cases))
        rows.append([k, "fock", worst])
        res.add(at_most(f"exclusion_fock_k{k}", worst, 1e-10))
        with res.timed(f"doubled_k{k}"):
            pair = qfree.KPair.scalar(_safe_kappa(cfg.qf_kappa, kernel.eta), kernel.eta, grid)
            dgrid = qfree.DoubledGrid(grid, kernel)
            worst = max(qfree.d_plus_power_norm(_rc(rng, S), k, pair, dgrid)
                        for _ in range(cfg.cases))
        rows.append([k, "doubled", worst])
        res.add(at_most(f"exclusion_doubled_k{k}", worst, 1e-10))
        if k == 4:
            F = qf.random_vector(space, rng, [1], 5)
            res.add(at_most("exclusion_fock_k4_one_particle",
                            qf.exclusion_norm(kernel, _rc(rng, S), 4, F), 1e-10))

    with res.timed("constant"):
        rows = res.table("constant_symmetrization",
                         ["k", "angle", "direct_re", "direct_im", "q_factorial_re",
                          "q_factorial_im", "stated_re", "stated_im"])
        worst_qf = worst_stated = 0.0
        for _ in range(5):
            theta = rng.uniform(0, 2 * math.pi)
            kernel = QKernel(cmath.exp(1j * theta), cfg.eta)
            for k in range(1, 6):
                direct = qf.constant_symmetrization(kernel, k)
                qfac = q_factorial_over_factorial(kernel.q, k)
                stated = stated_constant(kernel.q, k)
                worst_qf = max(worst_qf, abs(direct - qfac))
                worst_stated = max(worst_stated, abs(direct - stated))
                rows.append([k, theta, direct.real, direct.imag, qfac.real, qfac.imag,
                             stated.real, stated.imag])
        res.add(at_most("constant_symmetrization_q_factorial", worst_qf, 1e-12))
        res.add(at_most("constant_symmetrization_stated_closed_form", worst_stated, 1e-12,
                        informational=True,
                        note="closed form agrees only for k <= 2; see the decisions ledger"))
        worst = max(abs(qf.constant_symmetrization(QKernel.from_angle(1, k), k))
                    for k in range(2, 6))
        res.add(at_most("constant_symmetrization_vanishes_at_roots", worst, 1e-12))
    return res


def _safe_kappa(kappa: float, eta: float) -> float:
    """Shrink ``kappa`` so that ``kappa^2 <= -1/eta`` when ``eta < 0``."""
    if eta < 0:
        return min(kappa, math.sqrt(-1.0 / eta))
    return kappa


# -- quasifree --------------------------------------------------------------

def _random_block_T(rng, m: int, f: int, eta: float) -> np.ndarray:
    A = rng.standard_normal((m, f, f))
    T = A @ np.swapaxes(A, 1, 2) / f
    if eta < 0:
        T *= 0.9 * (-1.0 / eta) / np.linalg.eigvalsh(T).max()
    return T


def _disjoint_smears(rng, grid: Grid, n: int):
    """``g_i`` on cell ``i``, ``h_i`` on cell ``sigma(i)``, random values over the fiber."""
    def on_cell(a):
        return grid.indicator(a) * _rc(rng, grid.n_sites)
    sigma = rng.permutation(n)
    return [on_cell(i) for i in range(n)], [on_cell(int(s)) for s in sigma]


def suite_quasifree(cfg: ExperimentConfig) -> SuiteResult:
    res = SuiteResult("quasifree")
    rng = _rng(cfg, "quasifree")
    base = cfg.kernel()
    kernels = {"config": base, "boson": QKernel(1.0), "fermion": QKernel(-1.0)}
    grid1 = Grid.uniform(max(cfg.m, 3), cfg.total_mass)
    grid2 = Grid.uniform(3, cfg.total_mass, fiber_dim=2)
    rows = res.table("quasifree_crosscheck", ["kernel", "T", "n", "fock_re", "fock_im",
                                              "qperm_re", "qperm_im", "residual"])
    for kname, kernel in kernels.items():
        eta = kernel.eta
        pairs = {
            "scalar": (grid1, qfree.KPair.scalar(_safe_kappa(cfg.qf_kappa, eta), eta, grid1)),
            "block": (grid2, qfree.KPair(_random_block_T(rng, 3, 2, eta), eta)),
        }
        for tname, (grid, pair) in pairs.items():
            with res.timed(f"{kname}_{tname}"):
                res.add(at_most(f"K_constraint_{kname}_{tname}", pair.constraint_residual(), 1e-12),
                        at_most(f"K_commutes_with_axis_functions_{kname}_{tname}",
                                pair.commutator_residual(rng.standard_normal(grid.n_axis)), 1e-12))
                for n in (1, 2, 3):
                    gs, hs = _disjoint_smears(rng, grid, n)
                    vf, vq, r = qfree.crosscheck_npoint(gs, hs, pair, grid, kernel)
                    rows.append([kname, tname, n, vf.real, vf.imag, vq.real, vq.imag, r])
                    res.add(at_most(f"npoint_disjoint_{kname}_{tname}_n{n}", r, 1e-12 if n == 1 else 1e-10))
                dgrid = qfree.DoubledGrid(grid, kernel)
                S = grid.n_sites
                worst = 0.0
                for word_signs in ("+", "-", "++-", "+--", "++", "--"):
                    word = [(s, _rc(rng, S)) for s in word_signs]
                    worst = max(worst, abs(qfree.tau_vacuum(word, pair, dgrid)))
                res.add(at_most(f"gauge_unbalanced_{kname}_{tname}", worst, 1e-12))
                smears = [_rc(rng, S) for _ in range(4)]
                G = qfree.gram_matrix(smears, pair, dgrid)
                lam = np.linalg.eigvalsh((G + G.conj().T) / 2).min()
                res.add(at_least(f"gram_psd_{kname}_{tname}", lam, 1e-9))

    with res.timed("degenerations"):
        grid = Grid.uniform(3, cfg.total_mass, fiber_dim=2)
        for kname, kernel, ref in (("boson", QKernel(1.0), qfree.permanent),
                                   ("fermion", QKernel(-1.0), qfree.determinant)):
            pair = qfree.KPair(_random_block_T(rng, 3, 2, kernel.eta), kernel.eta)
            worst = 0.0
            for _ in range(cfg.cases):
                if kname == "boson":
                    gs = [_rc(rng, grid.n_sites) for _ in range(3)]
                else:
                    gs = [grid.indicator(a) * _rc(rng, grid.n_sites) for a in range(3)]
                hs = [_rc(rng, grid.n_sites) for _ in range(3)]
                qp = qfree.npoint_qpermanent(gs, hs, pair, grid, kernel)
                worst = max(worst, abs(qp - ref(qfree.s11_matrix(gs, hs, pair, grid))))
            res.add(at_most(f"qpermanent_{kname}_degeneration", worst, 1e-10))

    with res.timed("overlap_scaling"):
        kernel = base
        rows = res.table("quasifree_scaling", ["refinements", "max_weight", "residual", "ratio"])
        g_ = Grid.uniform(cfg.m, cfg.total_mass)
        prev = None
        for level in range(cfg.halvings + 1):
            pair = qfree.KPair.scalar(_safe_kappa(cfg.qf_kappa, kernel.eta), kernel.eta, g_)
            gs = [_smooth(g_, 0), _smooth(g_, 1)]
            hs = [_smooth(g_, 2), _smooth(g_, 3)]
            r = qfree.crosscheck_npoint(gs, hs, pair, g_, kernel)[2]
            ratio = r / prev if prev else float("nan")
            rows.append([level, max(g_.weights), r, ratio])
            if prev:
                res.add(close(f"npoint_overlap_ratio_refinement_{level}", ratio, 0.5, 0.1))
            prev = r
            g_ = g_.refined()
    return res


# -- density ----------------------------------------------------------------

def _positive_smears(rng, grid: Grid, n: int):
    return [rng.uniform(0.2, 1.5, grid.n_sites) for _ in range(n)]


def _density_grid(cfg: ExperimentConfig) -> Grid:
    return Grid.uniform(cfg.m, cfg.total_mass)


def suite_density(cfg: ExperimentConfig) -> SuiteResult:
    res = SuiteResult("density")
    rng = _rng(cfg, "density")
    grid = _density_grid(cfg)
    fs = _positive_smears(rng, grid, cfg.density_nmax)
    rows = res.table("density_moments", ["eta", "kappa", "n", "rho_moment", "exact",
                                         "empirical", "standard_error"])
    point = 0
    for eta in cfg.density_etas:
        for kappa in cfg.density_kappas:
            point += 1
            with res.timed(f"eta{eta:g}_kappa{kappa:g}"):
                p = dens.DensityParams(eta, kappa)
                model = pp.build_levy("poisson", 0.0, kappa) if eta == 0 else pp.build_levy("negbin", eta, kappa)
                config = pp.sample(grid, model, cfg.seed + 7919 * point, cfg.samples)
                for n in range(1, cfg.density_nmax + 1):
                    rho = dens.rho_moment(fs[:n], p, grid)
                    exact = pp.exact_joint_moment(fs[:n], model, grid)
                    emp, se = pp.empirical_moment(fs[:n], config)
                    rows.append([eta, kappa, n, rho, exact, emp, se])
                    tag = f"eta{eta:g}_kappa{kappa:g}_n{n}"
                    res.add(close(f"rho_vs_cumulant_{tag}", rho, exact, 1e-9, rel=True),
                            within_se(f"rho_vs_monte_carlo_{tag}", emp, rho, se))
                if eta >= 0:
                    f = fs[0]
                    mom = [dens.rho_moment([f] * j, p, grid) for j in range(5)]
                    H = np.array([[mom[i + j] for j in range(3)] for i in range(3)])
                    lam = np.linalg.eigvalsh(H / np.abs(H).max()).min()
                    res.add(at_least(f"hankel_psd_eta{eta:g}_kappa{kappa:g}", lam, 1e-9))

    with res.timed("positivity"):
        cell = Grid((1.0, 2.0), (0.5, 0.5))
        f = cell.indicator(0).real
        wit = dens.positivity_witness(f, -1.0, cell)
        res.add(close("positivity_witness_closed_form", wit, -0.5, 0.0))
        res.add(flag("positivity_witness_negative", wit < 0, wit))
        for kappa in (0.3, 0.7, 0.95):
            route = dens.witness_from_moments(f, dens.DensityParams(-1.0, kappa), cell)
            res.add(close(f"positivity_witness_jacobi_route_kappa{kappa:g}", route, wit, 1e-12))

    with res.timed("meixner"):
        rows = res.table("meixner", ["eta", "kappa", "k", "a_k", "a_expected", "b_k",
                                     "b_expected", "hankel_cond"])
        for eta, kappa in cfg.meixner_points:
            p = dens.DensityParams(eta, kappa)
            m = dens.meixner_coeffs(p, 5)
            for k in range(6):
                rows.append([eta, kappa, k, m.a[k], eta * k * (k + 1) if k else m.total_mass,
                             m.b[k], p.lam * (k + 1), m.hankel_cond])
            tag = f"eta{eta:g}_kappa{kappa:g}"
            res.add(close(f"kolmogorov_total_mass_{tag}", m.total_mass, 1.0, 1e-10),
                    close(f"meixner_b0_{tag}", m.b[0], p.lam, 1e-8),
                    close(f"meixner_a1_{tag}", m.a[1], 2 * eta, 1e-6))
    return res


# -- pointproc --------------------------------------------------------------

def suite_pointproc(cfg: ExperimentConfig) -> SuiteResult:
    res = SuiteResult("pointproc")
    grid = _density_grid(cfg)
    model = pp.build_levy("negbin", cfg.pp_eta, cfg.pp_kappa)
    n = cfg.samples
    with res.timed("negbin_marginal"):
        comp = pp.sample(grid, model, cfg.seed, n, method="compound")
        direct = pp.sample(grid, model, cfg.seed + 1, n, method="direct")
        rows = res.table("negbin_pmf", ["cell", "k", "empirical", "exact"])
        for c, w in enumerate(grid.site_weight):
            counts = np.bincount(comp.masses[:, c].astype(int))
            pmf = pp.negbin_pmf(np.arange(counts.size), float(w), model)
            for k in range(counts.size):
                rows.append([c, k, counts[k] / n, pmf[k]])
            res.add(at_most(f"negbin_tv_cell{c}", pp.total_variation(counts, pmf), 0.01))
            x = comp.masses[:, c]
            res.add(within_se(f"negbin_mean_cell{c}", float(x.mean()), cfg.pp_kappa**2 * w,
                              float(x.std(ddof=1) / math.sqrt(n))))
            other = np.bincount(direct.masses[:, c].astype(int))
            K = max(counts.size, other.size)
            tv = 0.5 * np.abs(np.pad(counts, (0, K - counts.size)) / n
                              - np.pad(other, (0, K - other.size)) / n).sum()
            res.add(at_most(f"negbin_compound_vs_direct_tv_cell{c}", tv, 0.01))
        x0 = comp.masses[:, 0] - comp.masses[:, 0].mean()
        x1 = comp.masses[:, 1] - comp.masses[:, 1].mean()
        prod = x0 * x1
        res.add(within_se("independent_cells_covariance", float(prod.mean()), 0.0,
                          float(prod.std(ddof=1) / math.sqrt(n))))

    rng = _rng(cfg, "pointproc")
    f = rng.uniform(0.2, 1.5, grid.n_sites)
    models = {
        "poisson": pp.build_levy("poisson", 0.0, cfg.pp_kappa),
        "negbin": model,
        "gamma": pp.build_levy("gamma", cfg.pp_eta),
    }
    rows = res.table("moments_vs_sampler", ["kind", "n", "exact", "empirical", "standard_error"])
    for i, (kind, mdl) in enumerate(models.items()):
        with res.timed(f"moments_{kind}"):
            config = comp if kind == "negbin" else pp.sample(grid, mdl, cfg.seed + 10 + i, n)
            for order in range(1, 5):
                exact = pp.exact_joint_moment([f] * order, mdl, grid)
                emp, se = pp.empirical_moment([f] * order, config)
                rows.append([kind, order, exact, emp, se])
                res.add(within_se(f"{kind}_moment_n{order}", emp, exact, se))
            emp, exact, gap, se = pp.laplace_check(-grid.indicator(0).real, mdl, grid, n,
                                                   cfg.seed + 20 + i)
            res.add(within_se(f"{kind}_laplace_one_cell", emp, exact, se))
    return res


# -- gamma limit ------------------------------------------------------------

def suite_gamma_limit(cfg: ExperimentConfig) -> SuiteResult:
    res = SuiteResult("gamma-limit")
    rng = _rng(cfg, "gamma-limit")
    grid = _density_grid(cfg)
    f = rng.uniform(0.2, 1.5, grid.n_sites)
    rows = res.table("gamma_sweep", ["eta", "n", "kappa", "gap", "gamma_moment", "relative_gap"])
    for eta in cfg.gamma_etas:
        with res.timed(f"sweep_eta{eta:g}"):
            for n in range(1, cfg.gamma_nmax + 1):
                gaps, target = dens.gamma_limit_check(f, eta, n, cfg.gamma_kappas, grid)
                for kappa, gap in zip(cfg.gamma_kappas, gaps):
                    rows.append([eta, n, kappa, gap, target, gap / target])
                tag = f"eta{eta:g}_n{n}"
                res.add(flag(f"gamma_gap_decreasing_{tag}",
                             all(b < a for a, b in zip(gaps, gaps[1:])), gaps),
                        at_most(f"gamma_final_relative_gap_{tag}", gaps[-1] / target, 0.01))
        with res.timed(f"laplace_eta{eta:g}"):
            model = pp.build_levy("gamma", eta)
            t = 1.0
            ind = grid.indicator(0).real
            emp, exact, gap, se = pp.laplace_check(-t * ind, model, grid, cfg.samples,
                                                   cfg.seed + int(1000 * eta))
            closed = (1 + math.sqrt(eta) * t) ** (-grid.weights[0] / eta)
            res.add(close(f"gamma_laplace_closed_form_eta{eta:g}", exact, closed, 1e-12),
                    within_se(f"gamma_laplace_monte_carlo_eta{eta:g}", emp, closed, se))
    return res


RUNNERS = {
    "qcr": suite_qcr,
    "exclusion": suite_exclusion,
    "quasifree": suite_quasifree,
    "density": suite_density,
    "pointproc": suite_pointproc,
    "gamma-limit": suite_gamma_limit,
}


def _run_one(args):
    name, cfg = args
    return RUNNERS[name](cfg)


def run_suite(name: str, cfg: ExperimentConfig, parallel: bool = False) -> list[SuiteResult]:
    """Run one suite, or every suite for ``"all"``, in a fixed order."""
    if name == "all":
        names = list(SUITES)
    elif name in RUNNERS:
        names = [name]
    else:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    if parallel and len(names) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor() as ex:
            return list(ex.map(_run_one, [(n, cfg) for n in names]))
    return [_run_one((n, cfg)) for n in names]


def build_report(name: str, cfg: ExperimentConfig, results: list[SuiteResult]) -> dict:
    """Self-contained report dictionary (timings are kept apart)."""
    return {
        "suite": name,
        "version": __version__,
        "passed": all(r.passed for r in results),
        "config": cfg.echo(),
        "suites": [
            {
                "suite": r.suite,
                "passed": r.passed,
                "records": [vars(rec) for rec in r.records],
                "tables": r.tables,
            }
            for r in results
        ],
    }
