import math
from dataclasses import replace

import numpy as np
import pytest
import scipy.stats

from hdregtest.config import load_grid
from hdregtest.model import ValidationError
from hdregtest.report import read_simulation_csv, render_simulation_csv
from hdregtest.simulation import (
    CellError,
    GeneratorConfig,
    _stream,
    draw_experiment_constants,
    gen_beta,
    gen_design,
    gen_errors,
    gen_innovations,
    gen_response,
    moving_average,
    normal_split,
    run_cell,
    run_grid,
)

SMALL = GeneratorConfig(12, 20, 3, replications=40, eb_permutations=19)


def test_constants_deterministic_and_ranged():
    cfg = GeneratorConfig(30, 100, 10)
    rho, mu = draw_experiment_constants(cfg)
    rho2, mu2 = draw_experiment_constants(cfg)
    assert np.array_equal(rho, rho2) and np.array_equal(mu, mu2)
    assert rho.shape == (10,) and mu.shape == (100,)
    assert np.all((rho >= 0) & (rho < 1))
    assert np.all((mu >= 2) & (mu < 3))
    other, _ = draw_experiment_constants(replace(cfg, master_seed=cfg.master_seed + 1))
    assert not np.array_equal(rho, other)


def test_constants_nest_across_cells():
    short = draw_experiment_constants(GeneratorConfig(30, 100, 10))
    long = draw_experiment_constants(GeneratorConfig(40, 200, 20))
    assert np.array_equal(long[0][:10], short[0])
    assert np.array_equal(long[1][:100], short[1])


def test_moving_average_by_hand():
    Z = np.arange(12.0).reshape(2, 6)
    X = moving_average(Z, np.array([1.0, 10.0]), 5)
    assert np.array_equal(X[0], [0 + 10 * 1, 1 + 20, 2 + 30, 3 + 40, 4 + 50])


def test_design_ma_moments():
    cfg = GeneratorConfig(100_000, 8, 3)
    rho = np.array([0.9, 0.5, 0.3])
    X = gen_design(cfg, rho, np.zeros(8), 0)
    var = np.sum(rho**2)
    np.testing.assert_allclose(X.var(axis=0), var, rtol=0.02)
    Xc = X - X.mean(axis=0)
    for k in range(1, 5):
        expected = float(rho[: 3 - k] @ rho[k:]) if k < 3 else 0.0
        got = float(np.mean(Xc[:, 2] * Xc[:, 2 + k]))
        assert got == pytest.approx(expected, abs=0.02 * var)


def test_design_adds_means():
    cfg = GeneratorConfig(20_000, 6, 2)
    mu = np.array([2.1, 2.9, 2.5, 2.0, 2.3, 2.7])
    X = gen_design(cfg, np.array([0.5, 0.5]), mu, 3)
    np.testing.assert_allclose(X.mean(axis=0), mu, atol=0.03)


def test_scenario_two_variances():
    cfg = GeneratorConfig(100_000, 40, 3, scenario="II")
    rho = np.array([0.8, 0.4, 0.2])
    var = np.sum(rho**2)
    X = gen_design(cfg, rho, np.zeros(40), 0)
    assert X[:, 0].var() == pytest.approx(var, rel=0.03)
    assert X[:, -1].var() == pytest.approx(4 * var, rel=0.03)


def test_scenario_two_innovations_split():
    cfg = GeneratorConfig(50_000, 20, 5, scenario="II")
    Z = gen_innovations(cfg, _stream(1, 2, 3))
    k = normal_split(cfg)
    assert k == 12 and Z.shape == (50_000, 24)
    assert abs(scipy.stats.skew(Z[:, k - 1])) < 0.05
    # Gamma(4, 1) has skewness 2 / sqrt(4) = 1
    assert scipy.stats.skew(Z[:, k]) == pytest.approx(1.0, abs=0.1)
    assert Z[:, k:].mean() == pytest.approx(0.0, abs=0.02)


def test_beta_nonsparse_entries():
    beta = gen_beta(GeneratorConfig(30, 100, 10, alternative="Nonsparse", beta_norm_sq=0.03))
    assert np.count_nonzero(beta) == 50
    np.testing.assert_allclose(beta[:50], math.sqrt(0.0006), rtol=1e-15)
    assert beta @ beta == pytest.approx(0.03, rel=1e-12)


def test_beta_sparse_and_null():
    beta = gen_beta(GeneratorConfig(30, 100, 10, alternative="Sparse5", beta_norm_sq=0.09))
    assert np.count_nonzero(beta) == 5 and np.all(beta[:5] > 0)
    assert beta @ beta == pytest.approx(0.09, rel=1e-12)
    assert not np.any(gen_beta(GeneratorConfig(30, 100, 10)))


@pytest.mark.parametrize("residual", ["Normal4", "CenteredGamma"])
def test_error_moments(residual):
    cfg = GeneratorConfig(30, 100, 10, residual=residual)
    e = gen_errors(cfg, _stream(9, 9, 9), 100_000)
    assert e.var() == pytest.approx(4.0, rel=0.03)
    assert e.mean() == pytest.approx(0.0, abs=0.03)
    if residual == "CenteredGamma":
        assert scipy.stats.skew(e) == pytest.approx(2.0, rel=0.1)


def test_response_without_signal_is_error():
    cfg = GeneratorConfig(15, 20, 3)
    X = np.ones((15, 20))
    Y = gen_response(X, np.zeros(20), cfg, 4)
    e = gen_errors(cfg, _stream(cfg.master_seed, cfg.cell_key, 4, 2), 15)
    assert np.array_equal(Y, e)


def test_alternatives_share_designs_and_errors():
    null = GeneratorConfig(12, 20, 3)
    alt = replace(null, alternative="Nonsparse", beta_norm_sq=0.06)
    rho, mu = draw_experiment_constants(null)
    assert np.array_equal(gen_design(null, rho, mu, 7), gen_design(alt, rho, mu, 7))
    assert null.cell_key == alt.cell_key
    assert null.cell_key != replace(null, scenario="II").cell_key


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(T=20),
        dict(n=4),
        dict(alternative="Nonsparse"),
        dict(beta_norm_sq=0.03),
        dict(scenario="III"),
        dict(residual="t3"),
        dict(replications=0),
        dict(alpha=1.0),
        dict(p=4, T=2, alternative="Sparse5", beta_norm_sq=0.03),
    ],
)
def test_config_validation(kwargs):
    base = dict(n=12, p=20, T=3)
    base.update(kwargs)
    with pytest.raises(ValidationError):
        GeneratorConfig(**base)


def test_run_cell_deterministic_and_consistent():
    a, b = run_cell(SMALL), run_cell(SMALL)
    assert a.rejections == b.rejections
    for m in ("SF", "ZC", "EB"):
        assert np.array_equal(a.p_values[m], b.p_values[m])
        r = a.rejection_rate(m)
        assert a.mc_standard_error(m) == pytest.approx(math.sqrt(r * (1 - r) / a.replications))
    assert a.replications == 40 and a.failures == 0


def test_run_cell_thread_count_irrelevant():
    serial = run_cell(SMALL, threads=1)
    parallel = run_cell(SMALL, threads=8)
    for m in ("SF", "ZC", "EB"):
        assert np.array_equal(serial.p_values[m], parallel.p_values[m])


def test_single_replication():
    res = run_cell(replace(SMALL, replications=1))
    for m in ("SF", "ZC", "EB"):
        assert res.rejection_rate(m) in (0.0, 1.0)
        assert res.mc_standard_error(m) == 0.0


def test_grid_order_only_permutes_rows():
    cells = [SMALL, replace(SMALL, scenario="II"), replace(SMALL, alternative="Sparse5", beta_norm_sq=0.5)]
    forward = run_grid(cells)
    backward = run_grid(cells[::-1])
    for f, b in zip(forward, backward[::-1]):
        assert f.config == b.config and f.rejections == b.rejections


def test_empty_grid():
    with pytest.raises(ValidationError):
        run_grid([])


def test_failing_cell_reported_and_grid_continues(monkeypatch):
    import hdregtest.simulation as sim

    real = sim.run_cell

    def flaky(cfg, threads=1):
        if cfg.scenario == "II":
            raise RuntimeError("boom")
        return real(cfg, threads)

    monkeypatch.setattr(sim, "run_cell", flaky)
    out = run_grid([replace(SMALL, scenario="II"), SMALL])
    assert isinstance(out[0], CellError) and "boom" in out[0].message
    assert out[1].replications == 40


def test_skipped_replication_counted(monkeypatch):
    import hdregtest.simulation as sim

    real = sim._replicate

    def sometimes(cfg, rho, mu, beta, index):
        if index % 10 == 0:
            raise ValidationError("synthetic")
        return real(cfg, rho, mu, beta, index)

    monkeypatch.setattr(sim, "_replicate", sometimes)
    res = run_cell(SMALL)
    assert res.failures == 4 and res.replications == 36


def test_bundled_grid_inventory():
    grid = load_grid("paper-tables")
    assert len(grid) == 168
    keys = {(c.residual, c.scenario, c.T, c.n, c.p, c.alternative, c.beta_norm_sq) for c in grid}
    assert len(keys) == 168
    assert {(c.n, c.p) for c in grid} == {(30, 100), (40, 200), (50, 400)}
    assert {c.T for c in grid} == {10, 20}
    levels = {c.beta_norm_sq for c in grid if c.alternative != "Null"}
    assert levels == {0.03, 0.06, 0.09}
    # 84 table rows of (SF, ZC, EB) triples per residual law
    per_residual = {r: sum(c.residual == r for c in grid) for r in ("Normal4", "CenteredGamma")}
    assert per_residual == {"Normal4": 84, "CenteredGamma": 84}


def test_csv_round_trip():
    results = run_grid([SMALL, replace(SMALL, alternative="Nonsparse", beta_norm_sq=0.4)])
    rows = read_simulation_csv(render_simulation_csv(results))
    assert len(rows) == 6
    for row in rows:
        res = results[row["cell"] - 1]
        assert row["rejection_rate"] == res.rejection_rate(row["method"])
        assert row["mc_standard_error"] == res.mc_standard_error(row["method"])
        assert row["beta_norm_sq"] == res.config.beta_norm_sq
        assert row["valid_replications"] == res.replications


@pytest.mark.slow
def test_scenario_two_separation_and_monotonicity():
    base = GeneratorConfig(30, 100, 10, scenario="II", alternative="Nonsparse", beta_norm_sq=0.03)
    results = run_grid([replace(base, beta_norm_sq=b) for b in (0.03, 0.06, 0.09)])
    sf = [r.rejection_rate("SF") for r in results]
    for lo, hi, res in zip(sf, sf[1:], results[1:]):
        assert hi >= lo - 2 * res.mc_standard_error("SF")
    for res in results[1:]:
        assert res.rejection_rate("SF") > res.rejection_rate("ZC")
