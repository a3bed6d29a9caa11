import numpy as np
import pytest

import strucbreak.montecarlo as mc
from strucbreak import (DesignSpec, DgpSpec, EnvelopeConfig, ExperimentConfig,
                        InnovationSpec, KernelSpec, TestSpec, build_design,
                        compute_break_process, gen_covariates, gen_dgp,
                        gen_innovations, local_power_break, make_grid,
                        power_envelope, run_experiment)
from strucbreak.exceptions import (CatalogUnknownError, ConfigError,
                                   NoCrossingError, StrucbreakError)
from strucbreak.montecarlo import (_expw_stats_from_forms, _residual_forms,
                                   _split_columns)


def test_covariate_moments():
    rng = np.random.default_rng(1)
    Z = gen_covariates(100_000, rng)
    assert Z.min() >= 0.0 and Z.max() <= 5.0
    assert Z[:, 0].mean() == pytest.approx(2.5, abs=0.02)
    assert np.corrcoef(Z[:, 0], Z[:, 1])[0, 1] == pytest.approx(0.5, abs=0.02)


def test_innovation_variances():
    rng = np.random.default_rng(2)
    v = gen_innovations(InnovationSpec(), 10_000, rng)
    assert np.var(v) == pytest.approx(1.0, abs=0.05)
    v = gen_innovations(InnovationSpec.arch1(), 50_000, rng)
    assert np.var(v) == pytest.approx(0.2, abs=0.03)
    v = gen_innovations(InnovationSpec.garch11(), 50_000, rng)
    assert np.var(v) == pytest.approx(0.1 / (1 - 0.25 - 0.4), abs=0.04)


def test_innovation_stationarity_validation():
    with pytest.raises(ConfigError):
        InnovationSpec(kind="arch", alpha=1.0)
    with pytest.raises(ConfigError):
        InnovationSpec(kind="garch", alpha=0.7, beta=0.5)
    with pytest.raises(ConfigError):
        InnovationSpec(kind="student")


def test_dgp1_has_no_break_and_exact_mean():
    rng = np.random.default_rng(3)
    sample, meta = gen_dgp(DgpSpec("dgp1", 6000), rng)
    assert meta["true_breaks"] == ()
    za = 2.0 + 2.0 * sample.Z @ np.ones(2)
    centered = sample.y - np.exp(0.15 * za)
    assert centered.mean() == pytest.approx(0.0, abs=0.05)
    assert np.var(centered) == pytest.approx(1.0, abs=0.06)


def test_dgp3_regime_structure():
    n = 12_000
    rng = np.random.default_rng(4)
    sample, meta = gen_dgp(DgpSpec("dgp3", n), rng)
    assert meta["true_breaks"] == (1 / 3, 2 / 3)
    ll = np.log(np.log(2.0 + 2.0 * sample.Z @ np.ones(2)))
    third = n // 3
    for sl, coef in ((slice(0, third), 1.8), (slice(third, 2 * third), 0.2),
                     (slice(2 * third, n), 5.2)):
        resid = sample.y[sl] - coef * ll[sl]
        assert resid.mean() == pytest.approx(0.0, abs=0.06)


def test_ardgp_regimes():
    n = 6000
    rng = np.random.default_rng(5)
    sample, meta = gen_dgp(DgpSpec("ardgp2", n), rng)
    assert meta["true_breaks"] == (0.5,)
    half = n // 2
    # first regime: MA(24) with mean 0.5 and variance sum(theta^2) = 2.71;
    # the weight sum is 6.9, so the sample mean has sd sqrt(6.9^2 / 3000) ~ 0.13
    theta2 = sum((0.9 - j / 10) ** 2 for j in range(1, 7)) + 18 * 0.04
    assert sample.y[:half].mean() == pytest.approx(0.5, abs=0.4)
    assert np.var(sample.y[:half]) == pytest.approx(theta2, abs=0.5)
    # second regime: pure standard normal noise
    assert sample.y[half:].mean() == pytest.approx(0.0, abs=0.1)
    assert np.var(sample.y[half:]) == pytest.approx(1.0, abs=0.1)


def test_ardgp3_third_regime_autoregression():
    n = 9000
    rng = np.random.default_rng(6)
    sample, meta = gen_dgp(DgpSpec("ardgp3", n), rng)
    assert meta["true_breaks"] == (1 / 3, 2 / 3)
    tail = sample.y[2 * (n // 3) + 50:]
    # AR(1) with intercept 1 and coefficient 0.4: mean 1/(1-0.4)
    assert tail.mean() == pytest.approx(1.0 / 0.6, abs=0.15)
    r1 = np.corrcoef(tail[:-1], tail[1:])[0, 1]
    assert r1 == pytest.approx(0.4, abs=0.08)


def test_localpower_family():
    rng = np.random.default_rng(7)
    sample, meta = gen_dgp(DgpSpec("localpower", 4000, ell=6), rng)
    assert meta["true_breaks"] == (0.5,)
    # ell = 6 intercept 2.2 raises the post-break mean
    assert sample.y[2000:].mean() > sample.y[:2000].mean()
    with pytest.raises(CatalogUnknownError):
        DgpSpec("localpower", 300, ell=7)


def test_rhobreak_family():
    rng = np.random.default_rng(8)
    sample, meta = gen_dgp(DgpSpec("rhobreak", 400, rho=0.02, p_dim=5), rng)
    assert sample.k == 4
    assert meta["true_breaks"] == (0.5,)
    sample0, meta0 = gen_dgp(DgpSpec("rhobreak", 400, rho=0.0, p_dim=5), rng)
    assert meta0["true_breaks"] == ()
    with pytest.raises(CatalogUnknownError):
        DgpSpec("rhobreak", 400, rho=-0.1)


def test_catalog_validation():
    with pytest.raises(CatalogUnknownError):
        DgpSpec("dgp9", 300)
    with pytest.raises(CatalogUnknownError):
        DgpSpec("ardgp1", 300, innovation=InnovationSpec.arch1())


def test_gen_dgp_reproducible():
    a, _ = gen_dgp(DgpSpec("dgp2", 500, seed=42))
    b, _ = gen_dgp(DgpSpec("dgp2", 500, seed=42))
    np.testing.assert_array_equal(a.y, b.y)
    np.testing.assert_array_equal(a.Z, b.Z)


def test_local_power_break_values():
    delta = local_power_break([1.0], 1, 16)
    assert delta[0] == pytest.approx(2.0 ** 0.25 / 4.0, abs=1e-10)
    assert delta[0] == pytest.approx(0.29730, abs=5e-6)
    tau4 = np.full(4, 0.5)
    base = np.linalg.norm(local_power_break(tau4, 4, 100))
    assert np.linalg.norm(local_power_break(tau4, 4, 400)) == \
        pytest.approx(base / 2.0, rel=1e-12)
    tau64 = np.full(64, 1 / 8.0)
    assert np.linalg.norm(local_power_break(tau64, 64, 100)) == \
        pytest.approx(2.0 * base, rel=1e-12)
    with pytest.raises(ConfigError):
        local_power_break([1.0, 1.0], 2, 50)


def _tiny_config(**overrides):
    base = dict(
        dgp=DgpSpec("dgp2", 150),
        design=DesignSpec.polynomial(1),
        gamma_star=0.35,
        step=0.05,
        kernels=(KernelSpec("none", 1.0), KernelSpec("parzen", 2.0)),
        tests=(TestSpec("sup"), TestSpec("avg")),
        levels=(0.05,),
        reps=25,
        seed=99,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_run_experiment_basic():
    result = run_experiment(_tiny_config())
    assert result.failures == 0
    assert len(result.cells) == 4
    for cell in result.cells:
        assert 0.0 <= cell["rejection_rate"] <= 1.0
        assert cell["p"] == 3
    # a strong break: the sup test should fire most of the time
    assert result.rate("parzen", "sup", 0.05) >= 0.5
    rows = result.csv_rows()
    assert rows[0][0] == "dgp"
    assert len(rows) == 5


def test_run_experiment_deterministic():
    a = run_experiment(_tiny_config())
    b = run_experiment(_tiny_config())
    for ca, cb in zip(a.cells, b.cells):
        assert ca == cb
    assert a.config_hash == b.config_hash


def test_run_experiment_counts_failures(monkeypatch):
    calls = {"n": 0}
    real = mc.compute_break_process

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] % 5 == 0:
            raise StrucbreakError("synthetic failure")
        return real(*args, **kwargs)

    monkeypatch.setattr(mc, "compute_break_process", flaky)
    result = run_experiment(_tiny_config())
    assert result.failures == 5
    assert result.reps == 25


def test_run_experiment_simulated_cvs_for_expq():
    config = _tiny_config(tests=(TestSpec("expq", 15.0),),
                          kernels=(KernelSpec("none", 1.0),),
                          cv_reps=400, n_grid=400, reps=10)
    result = run_experiment(config)
    assert 0.0 <= result.rate("none", "expq(c=15)", 0.05) <= 1.0


def test_envelope_forms_match_pipeline_wald():
    # dual route: the cached quadratic forms must reproduce the pipeline's
    # homoskedastic Wald process for y = eps + sqrt(c) u
    rng = np.random.default_rng(11)
    n = 120
    Z = gen_covariates(n, rng)
    from strucbreak import build_polynomial_basis, build_raw_design
    X = build_polynomial_basis(Z, 1).X
    p = X.shape[1]
    eps = rng.standard_normal(n)
    u = rng.standard_normal(n) * 0.2
    grid = make_grid(0.35, 0.05)
    Y = np.column_stack([eps, u])
    f_full = _residual_forms(X, Y)
    f_split = np.stack([_residual_forms(_split_columns(X, g), Y)
                        for g in grid.points])
    for c in (1.0, 9.0):
        y = eps + np.sqrt(c) * u
        dm = build_raw_design(X[:, 1:], include_intercept=True)
        bp = compute_break_process(dm, y, grid, "homoskedastic")
        s = np.sqrt(np.array([c]))[:, None]
        rss0 = f_full[0, 0] + 2 * s * f_full[0, 1] + s**2 * f_full[1, 1]
        rssg = (f_split[None, :, 0, 0] + 2 * s * f_split[None, :, 0, 1]
                + s**2 * f_split[None, :, 1, 1])
        wald = n * (rss0 - rssg) / rssg
        np.testing.assert_allclose(wald[0], bp.wald, rtol=1e-8)


def test_envelope_smoke_and_monotone_trend():
    config = EnvelopeConfig(n=120, degree=1, gamma_star=0.35, step=0.01,
                            reps=80, null_reps=150, c_min=4.0, c_max=30.0,
                            c_step=1.0, level=0.05, seed=5)
    result = power_envelope(config)
    assert result.c_grid.size == result.power.size
    assert 4.0 <= result.solution <= 30.0
    # power trends upward across the c range
    k = result.power.size // 3
    assert result.power[-k:].mean() >= result.power[:k].mean()


def test_rhobreak_rate_monotone_in_rho():
    # many-small-shifts family: rejection nondecreasing in the shift size;
    # the no-shift cell reproduces the published size scale
    rates = {}
    for rho in (0.0, 0.01, 0.02, 0.03):
        config = ExperimentConfig(
            dgp=DgpSpec("rhobreak", 500, rho=rho, p_dim=20),
            design=DesignSpec.raw_columns(include_intercept=True),
            gamma_star=0.35, kernels=(KernelSpec("parzen", 12.0),),
            tests=(TestSpec("sup"),), levels=(0.05,), reps=100, seed=77)
        rates[rho] = run_experiment(config).rate("parzen", "sup", 0.05)
    keys = sorted(rates)
    assert all(rates[keys[i + 1]] >= rates[keys[i]] - 0.05 for i in range(3))
    assert rates[0.0] == pytest.approx(0.088, abs=0.07)
    assert rates[0.03] >= 0.9


def test_statistics_invariant_to_basis_change_end_to_end():
    # nonsingular reparameterization of the regressors leaves the whole
    # pipeline unchanged when the factor estimate uses the anchored
    # contraction (the ones-contraction deliberately fixes a direction in
    # regressor space, so it is basis dependent)
    from strucbreak import (avg_stat, build_raw_design, expq_stat,
                            har_estimate, sup_stat)
    rng = np.random.default_rng(13)
    n, p = 150, 3
    X = rng.standard_normal((n, p))
    y = rng.standard_normal(n)
    A = np.eye(p) + 0.2 * rng.standard_normal((p, p))
    assert abs(np.linalg.det(A)) > 0.3
    grid = make_grid(0.35, 0.01)
    stats = []
    for mat in (X, X @ A.T):
        dm = build_raw_design(mat, include_intercept=False)
        bp = compute_break_process(dm, y, grid, "eicker-white")
        har = har_estimate(dm, y, KernelSpec("parzen", 4.0), "eicker-white",
                           "last-obs")
        stats.append((sup_stat(bp, har)[0], avg_stat(bp, har),
                      expq_stat(bp, har, 15.0), har.v_hat))
    np.testing.assert_allclose(stats[0], stats[1], rtol=1e-6)


def test_envelope_no_crossing():
    config = EnvelopeConfig(n=120, degree=1, gamma_star=0.35, step=0.02,
                            reps=40, null_reps=80, c_min=0.05, c_max=0.15,
                            c_step=0.05, level=0.01, seed=6)
    with pytest.raises(NoCrossingError):
        power_envelope(config)
