import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special, stats

from anyonfock import pointproc as pp
from anyonfock.qcore import Grid

GRID = Grid((1.0, 2.0, 3.0), (0.3, 0.5, 0.2))
N_MC = 200_000


def test_negbin_atoms():
    eta, kappa = 0.5, 1.3
    m = pp.build_levy("negbin", eta, kappa)
    p = eta * kappa**2 / (1 + eta * kappa**2)
    assert m.p == pytest.approx(p)
    assert m.atoms[0, 1] == pytest.approx(p / eta)
    assert m.atoms[2, 1] == pytest.approx(p**3 / (3 * eta))
    assert np.sum(m.atoms[:, 0] * m.atoms[:, 1]) == pytest.approx(kappa**2, rel=1e-12)
    assert m.atoms[-1, 1] >= pp.TAIL_REL * m.total_mass


def test_small_eta_limit_is_poisson():
    m = pp.build_levy("negbin", 1e-9, 1.5)
    assert m.atoms[0, 1] == pytest.approx(1.5**2, rel=1e-6)
    assert m.atoms[1, 1] < 1e-6


def test_gamma_and_poisson_models():
    g = pp.build_levy("gamma", 0.5)
    assert g.infinite_activity and g.total_mass == math.inf
    assert g.density(1.0) == pytest.approx(math.exp(-1 / math.sqrt(0.5)) / 0.5)
    assert pp.build_levy("poisson", kappa=2.0).atoms.tolist() == [[1.0, 4.0]]
    with pytest.raises(ValueError):
        pp.build_levy("negbin", 0.0, 1.0)
    with pytest.raises(ValueError):
        pp.build_levy("gamma", -1.0)
    with pytest.raises(ValueError):
        pp.build_levy("cauchy", 1.0)
    with pytest.raises(ValueError):
        pp.build_levy("poisson", kappa=0.0)
    with pytest.raises(ValueError):
        pp.build_levy("poisson").density(1.0)


@pytest.mark.parametrize("j", range(1, 7))
def test_zeta_moments(j):
    nb = pp.build_levy("negbin", 0.7, 1.1)
    k = np.arange(1, 5000, dtype=float)
    direct = np.sum(k ** (j - 1) * nb.p**k) / 0.7
    assert nb.zeta_moment(j) == pytest.approx(direct, rel=1e-13)
    # the truncated atom list loses only the reported tail
    assert np.sum(nb.atoms[:, 0] ** j * nb.atoms[:, 1]) == pytest.approx(direct, rel=1e-6)
    g = pp.build_levy("gamma", 0.7)
    from scipy import integrate
    val, _ = integrate.quad(lambda s: s**j * g.density(s), 0, np.inf)
    assert g.zeta_moment(j) == pytest.approx(val, rel=1e-8)
    with pytest.raises(ValueError):
        nb.zeta_moment(0)


def test_pmf_matches_formula():
    eta, kappa, w = 0.5, 1.0, 0.4
    m = pp.build_levy("negbin", eta, kappa)
    k = np.arange(30)
    r = w / eta
    log = (-r * np.log1p(eta * kappa**2) + special.gammaln(r + k) - special.gammaln(r)
           - special.gammaln(k + 1) + k * np.log(m.p))
    np.testing.assert_allclose(pp.negbin_pmf(k, w, m), np.exp(log), rtol=1e-12)


def test_set_partitions_are_bell():
    assert [sum(1 for _ in pp.set_partitions(n)) for n in range(7)] == [1, 1, 2, 5, 15, 52, 203]


def test_exact_moment_examples(rng):
    f1, f2 = rng.uniform(0, 2, 3), rng.uniform(0, 2, 3)
    w = GRID.site_weight
    m = lambda g: np.sum(g * w)
    nb = pp.build_levy("negbin", 0.5, 1.5)
    assert pp.exact_joint_moment([f1], nb, GRID) == pytest.approx(1.5**2 * m(f1), rel=1e-12)
    po = pp.build_levy("poisson", kappa=1.5)
    two = 1.5**2 * m(f1 * f2) + 1.5**4 * m(f1) * m(f2)
    assert pp.exact_joint_moment([f1, f2], po, GRID) == pytest.approx(two, rel=1e-12)
    assert pp.exact_joint_moment([], po, GRID) == 1.0
    with pytest.raises(ValueError):
        pp.exact_joint_moment([f1] * 7, po, GRID)


@pytest.mark.parametrize("n", range(1, 7))
def test_exact_moment_single_cell_scipy(n):
    f = GRID.indicator(1).real
    w = GRID.weights[1]
    eta, kappa = 0.8, 1.3
    laws = {
        "poisson": stats.poisson(kappa**2 * w),
        "negbin": stats.nbinom(w / eta, 1 - eta / (eta + kappa**-2)),
        "gamma": stats.gamma(w / eta, scale=math.sqrt(eta)),
    }
    for kind, law in laws.items():
        model = pp.build_levy(kind, eta, kappa)
        assert pp.exact_joint_moment([f] * n, model, GRID) == pytest.approx(law.moment(n), rel=1e-10)


def test_sample_determinism_and_shapes():
    m = pp.build_levy("negbin", 0.5, 1.0)
    a = pp.sample(GRID, m, 7, 1000)
    b = pp.sample(GRID, m, 7, 1000)
    assert a.masses.shape == (1000, 3)
    assert a.masses.tobytes() == b.masses.tobytes()
    assert pp.sample(GRID, m, 8, 1000).masses.tobytes() != a.masses.tobytes()
    assert np.all(a.masses == np.round(a.masses)) and np.all(a.masses >= 0)
    with pytest.raises(ValueError):
        pp.sample(GRID, m, 7, 10, method="other")


def test_sample_spans_blocks():
    m = pp.build_levy("poisson", kappa=1.0)
    cfg = pp.sample(GRID, m, 3, pp.BLOCK + 17)
    assert cfg.masses.shape == (pp.BLOCK + 17, 3)
    # every (cell, block) stream is distinct
    assert not np.array_equal(cfg.masses[:17, 0], cfg.masses[pp.BLOCK:, 0])


def test_serialization():
    m = pp.build_levy("negbin", 0.5, 1.0)
    c = pp.sample(GRID, m, 1, 2)
    lines = c.to_csv().splitlines()
    assert lines[0] == "replicate,cell_index,mass" and len(lines) == 7
    d = json.loads(c.to_json())
    assert d["seed"] == 1 and len(d["masses"]) == 2 and d["kind"] == "negbin"
    g = pp.sample(GRID, pp.build_levy("gamma", 0.5), 1, 2)
    assert isinstance(json.loads(g.to_json())["masses"][0][0], float)


@pytest.mark.parametrize("kind", ["poisson", "negbin", "gamma"])
def test_moments_against_sampler(kind, rng):
    model = pp.build_levy(kind, 0.6, 1.2)
    cfg = pp.sample(GRID, model, 99, N_MC)
    f = rng.uniform(0.2, 1.5, 3)
    for n in range(1, 5):
        emp, se = pp.empirical_moment([f] * n, cfg)
        assert abs(emp - pp.exact_joint_moment([f] * n, model, GRID)) <= 4 * se


def test_negbin_marginal_and_routes():
    eta, kappa = 0.5, 1.0
    m = pp.build_levy("negbin", eta, kappa)
    comp = pp.sample(GRID, m, 5, N_MC)
    direct = pp.sample(GRID, m, 6, N_MC, method="direct")
    for c, w in enumerate(GRID.site_weight):
        x = comp.masses[:, c]
        assert abs(x.mean() - kappa**2 * w) <= 4 * x.std(ddof=1) / math.sqrt(N_MC)
        counts = np.bincount(x.astype(int))
        assert pp.total_variation(counts, pp.negbin_pmf(np.arange(counts.size), w, m)) <= 0.01
        y = np.bincount(direct.masses[:, c].astype(int), minlength=counts.size)
        counts = np.pad(counts, (0, y.size - counts.size))
        assert 0.5 * np.abs(counts - y).sum() / N_MC <= 0.01


def test_gamma_mean():
    eta = 0.5
    cfg = pp.sample(GRID, pp.build_levy("gamma", eta), 4, N_MC)
    for c, w in enumerate(GRID.site_weight):
        x = cfg.masses[:, c]
        assert abs(x.mean() - w / math.sqrt(eta)) <= 4 * x.std(ddof=1) / math.sqrt(N_MC)


def test_independent_cells():
    cfg = pp.sample(GRID, pp.build_levy("negbin", 1.0, 1.0), 11, N_MC)
    x = cfg.masses - cfg.masses.mean(axis=0)
    for a, b in ((0, 1), (1, 2), (0, 2)):
        prod = x[:, a] * x[:, b]
        assert abs(prod.mean()) <= 4 * prod.std(ddof=1) / math.sqrt(N_MC)


def test_total_variation_helper():
    assert pp.total_variation(np.array([5, 5]), np.array([0.5, 0.5])) == 0
    assert pp.total_variation(np.array([10]), np.array([0.5, 0.5])) == pytest.approx(0.5)


def test_laplace_examples():
    nb = pp.build_levy("negbin", 0.5, 1.0)
    zero = np.zeros(3)
    emp, exact, gap, se = pp.laplace_check(zero, nb, GRID, 1000, 1)
    assert emp == 1.0 and exact == 1.0 and gap == 0
    f = -GRID.indicator(0).real
    w = GRID.weights[0]
    series = math.exp(w * np.sum(np.expm1(-nb.atoms[:, 0]) * nb.atoms[:, 1]))
    assert pp.laplace_exact(f, nb, GRID) == pytest.approx(series, rel=1e-12)
    for eta in (0.5, 1.0):
        g = pp.build_levy("gamma", eta)
        t = 0.7
        closed = (1 + math.sqrt(eta) * t) ** (-w / eta)
        assert pp.laplace_exact(t * f, g, GRID) == pytest.approx(closed, rel=1e-13)
    with pytest.raises(ValueError):
        pp.laplace_check(-f, nb, GRID, 10, 1)


@pytest.mark.parametrize("kind", ["poisson", "negbin", "gamma"])
def test_laplace_monte_carlo(kind, rng):
    model = pp.build_levy(kind, 0.5, 1.0)
    f = -rng.uniform(0, 2, 3)
    emp, exact, gap, se = pp.laplace_check(f, model, GRID, N_MC, 21)
    assert gap <= 4 * se
