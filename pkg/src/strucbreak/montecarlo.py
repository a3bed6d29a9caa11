"""Simulation designs and experiment drivers.

The catalog covers the nonparametric designs (dgp1..dgp7: smooth regression
functions of two correlated uniform covariates, with zero to two mean
breaks), long-AR designs (ardgp1..ardgp3: an invertible MA(24) and its
broken variants), the intercept-shift family (localpower, ell = 1..6), and
the many-small-shifts family (rhobreak). Innovations can be iid normal,
ARCH(1), or GARCH(1,1).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .break_process import DEFAULT_STEP, compute_break_process, make_grid
from .design import DesignSpec, RawSample, build_design
from .exceptions import CatalogUnknownError, ConfigError, NoCrossingError, StrucbreakError
from .har import KernelSpec, har_estimate
from .null_sim import (LimitPathConfig, limit_functional_draws,
                       table_critical_values)
from .test_stats import TestSpec, compute_statistic

DGP_NAMES = (
    "dgp1", "dgp2", "dgp3", "dgp4", "dgp5", "dgp6", "dgp7",
    "ardgp1", "ardgp2", "ardgp3", "localpower", "rhobreak",
)

_ALPHA_BASE = np.array([2.0, 2.0, 2.0])
# intercepts of the shifted coefficient vector, ell = 1..6
_LOCALPOWER_INTERCEPTS = (1.2, 1.4, 1.6, 1.8, 2.0, 2.2)
# moving-average weights: six declining, then a flat tail through lag 24
_MA_WEIGHTS = np.concatenate([0.9 - np.arange(1, 7) / 10.0, np.full(18, 0.2)])


@dataclass(frozen=True)
class InnovationSpec:
    """Innovation process: iid normal, ARCH(1), or GARCH(1,1).

    ARCH: sigma_t^2 = omega + alpha v_{t-1}^2 (defaults 0.1, 0.5).
    GARCH adds beta * sigma_{t-1}^2 (defaults 0.1, 0.25, 0.4). The recursion
    starts at the unconditional variance and a burn-in stretch is discarded.
    """

    kind: str = "iid"
    omega: float = 0.1
    alpha: float = 0.5
    beta: float = 0.0
    burn_in: int = 200

    def __post_init__(self):
        if self.kind not in ("iid", "arch", "garch"):
            raise ConfigError(f"innovation kind must be iid, arch, or garch, got {self.kind!r}")
        if self.kind == "arch":
            object.__setattr__(self, "beta", 0.0)
        if self.kind == "garch" and self.beta == 0.0:
            object.__setattr__(self, "alpha", 0.25)
            object.__setattr__(self, "beta", 0.4)
        if self.kind != "iid":
            if not self.omega > 0:
                raise ConfigError("innovation omega must be positive")
            if not 0 <= self.alpha < 1 or not 0 <= self.beta < 1 \
                    or not self.alpha + self.beta < 1:
                raise ConfigError("innovation parameters must satisfy alpha + beta < 1")

    @staticmethod
    def arch1(omega=0.1, alpha=0.5, burn_in=200):
        return InnovationSpec(kind="arch", omega=omega, alpha=alpha, burn_in=burn_in)

    @staticmethod
    def garch11(omega=0.1, alpha=0.25, beta=0.4, burn_in=200):
        return InnovationSpec(kind="garch", omega=omega, alpha=alpha, beta=beta,
                              burn_in=burn_in)


@dataclass(frozen=True)
class DgpSpec:
    """One catalog entry: name, sample size, innovations, and parameters."""

    name: str
    n: int
    innovation: InnovationSpec = field(default_factory=InnovationSpec)
    seed: int = 0
    ell: int = 1          # localpower only
    rho: float = 0.0      # rhobreak only
    p_dim: int = 20       # rhobreak only

    def __post_init__(self):
        if self.name not in DGP_NAMES:
            raise CatalogUnknownError(
                f"unknown design {self.name!r}; catalog: {sorted(DGP_NAMES)}")
        if self.n < 30:
            raise ConfigError("n must be at least 30")
        if self.name == "localpower" and not 1 <= self.ell <= 6:
            raise CatalogUnknownError("localpower requires ell in 1..6")
        if self.name == "rhobreak":
            if self.rho < 0:
                raise CatalogUnknownError("rhobreak requires rho >= 0")
            if self.p_dim < 2:
                raise CatalogUnknownError("rhobreak requires p_dim >= 2")
        if self.name.startswith("ardgp") and self.innovation.kind != "iid":
            raise CatalogUnknownError(
                "the AR designs are driven by iid standard normal innovations")


def gen_covariates(n, rng):
    """Two correlated covariates: z2 = (w1 + w2)/2, z3 = (w1 + w3)/2.

    w1, w2, w3 are iid Uniform(0, 5); the shared w1 makes corr(z2, z3) = 1/2.
    """
    w = rng.uniform(0.0, 5.0, size=(n, 3))
    return np.column_stack([(w[:, 0] + w[:, 1]) / 2.0, (w[:, 0] + w[:, 2]) / 2.0])


def gen_innovations(spec, n, rng):
    """Simulate n innovations, discarding the burn-in stretch."""
    if spec.kind == "iid":
        return rng.standard_normal(n)
    total = n + spec.burn_in
    eta = rng.standard_normal(total)
    v = np.empty(total)
    sigma2 = spec.omega / (1.0 - spec.alpha - spec.beta)
    for t in range(total):
        v[t] = np.sqrt(sigma2) * eta[t]
        sigma2 = spec.omega + spec.alpha * v[t] ** 2 + spec.beta * sigma2
    return v[spec.burn_in:]


def _loglog(za):
    return np.log(np.log(za))


def _regime_index(n, fractions):
    """Regime label per observation for break fractions like (1/3, 2/3)."""
    t = np.arange(1, n + 1)
    idx = np.zeros(n, dtype=int)
    for frac in fractions:
        idx += t > int(np.floor(n * frac))
    return idx


def _sieve_mean(name, Z, regime):
    za = _ALPHA_BASE[0] + Z @ _ALPHA_BASE[1:]
    ll = _loglog(za)
    exp_part = np.exp(0.15 * za)
    inv_part = 1.0 + 0.3 * (Z[:, 0] ** -2 + Z[:, 1] ** -0.5)
    trig_part = 1.0 + 0.5 * (np.sin(Z[:, 0]) + np.cos(Z[:, 1]))
    pieces = {
        "dgp1": (exp_part,),
        "dgp2": (1.8 * ll, 0.2 * ll),
        "dgp3": (1.8 * ll, 0.2 * ll, 5.2 * ll),
        "dgp4": (inv_part, 1.8 * ll),
        "dgp5": (trig_part, exp_part),
        "dgp6": (inv_part, 1.8 * ll, exp_part),
        "dgp7": (trig_part, exp_part, 1.8 * ll),
    }[name]
    return np.choose(regime, pieces)


def _ar_series(name, n, spec, rng):
    burn = spec.burn_in
    m = burn + n
    v = rng.standard_normal(m + 24)
    base = np.full(m, 0.5)
    for j in range(1, 25):
        base += _MA_WEIGHTS[j - 1] * v[24 - j:24 - j + m]
    v_now = v[24:]
    y = base[burn:].copy()
    v_tail = v_now[burn:]
    if name == "ardgp1":
        return y
    half = n // 2
    third = n // 3
    if name == "ardgp2":
        y[half:] = v_tail[half:]
        return y
    y[third:2 * third] = v_tail[third:2 * third]
    for t in range(2 * third, n):
        y[t] = 1.0 + 0.4 * y[t - 1] + v_tail[t]
    return y


def gen_dgp(spec, rng=None):
    """Generate one sample from the catalog.

    Returns (RawSample, metadata); metadata records the true break fractions
    and the design the published experiments pair with this process.
    """
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    n = spec.n
    name = spec.name
    meta = {"name": name, "true_breaks": (), "suggested_design": "polynomial"}

    if name.startswith("dgp"):
        Z = gen_covariates(n, rng)
        v = gen_innovations(spec.innovation, n, rng)
        breaks = {"dgp1": (), "dgp2": (0.5,), "dgp3": (1 / 3, 2 / 3),
                  "dgp4": (0.5,), "dgp5": (0.5,), "dgp6": (1 / 3, 2 / 3),
                  "dgp7": (1 / 3, 2 / 3)}[name]
        regime = _regime_index(n, breaks)
        y = _sieve_mean(name, Z, regime) + v
        meta["true_breaks"] = breaks
        return RawSample(y=y, Z=Z), meta

    if name.startswith("ardgp"):
        y = _ar_series(name, n, spec.innovation, rng)
        meta["true_breaks"] = {"ardgp1": (), "ardgp2": (0.5,),
                               "ardgp3": (1 / 3, 2 / 3)}[name]
        meta["suggested_design"] = "ar"
        return RawSample(y=y, Z=np.empty((n, 0))), meta

    if name == "localpower":
        Z = gen_covariates(n, rng)
        v = gen_innovations(spec.innovation, n, rng)
        alpha_null = np.array([1.0, 1.0, 1.0])
        alpha_alt = alpha_null.copy()
        alpha_alt[0] = _LOCALPOWER_INTERCEPTS[spec.ell - 1]
        regime = _regime_index(n, (0.5,))
        mean_null = 1.8 * _loglog(alpha_null[0] + Z @ alpha_null[1:])
        mean_alt = 1.8 * _loglog(alpha_alt[0] + Z @ alpha_alt[1:])
        y = np.where(regime == 0, mean_null, mean_alt) + v
        meta["true_breaks"] = (0.5,)
        return RawSample(y=y, Z=Z), meta

    # rhobreak: unit first column, p_dim - 1 uniform columns, all-ones slope
    Z = rng.uniform(0.0, 5.0, size=(n, spec.p_dim - 1))
    v = rng.standard_normal(n)
    level = 1.0 + Z.sum(axis=1)
    regime = _regime_index(n, (0.5,))
    y = np.where(regime == 0, level, level * (1.0 + spec.rho)) + v
    meta["true_breaks"] = (0.5,) if spec.rho > 0 else ()
    meta["suggested_design"] = "raw"
    return RawSample(y=y, Z=Z), meta


def local_power_break(tau, p, n):
    """Break vector of the drifting family: 2^(1/4) tau p^(1/4) / sqrt(n)."""
    tau = np.asarray(tau, dtype=float).ravel()
    if tau.size != p:
        raise ConfigError("tau must have length p")
    norm = np.linalg.norm(tau)
    if abs(norm - 1.0) > 1e-8:
        raise ConfigError("tau must be a unit vector")
    return 2.0 ** 0.25 * tau * p ** 0.25 / np.sqrt(n)


# ---------------------------------------------------------------------------
# experiment driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    dgp: DgpSpec
    design: DesignSpec
    gamma_star: float = 0.35
    step: float = DEFAULT_STEP
    variance_mode: str = "homoskedastic"
    zeta_mode: str = "ones"
    kernels: tuple = (KernelSpec("parzen", 14.0),)
    tests: tuple = (TestSpec("sup"),)
    levels: tuple = (0.05,)
    reps: int = 500
    seed: int = 0
    critical_values: str = "bundled"   # or "simulate"
    cv_reps: int = 10_000
    n_grid: int = 3600
    table_path: str | None = None

    def to_dict(self):
        return {
            "dgp": {"name": self.dgp.name, "n": self.dgp.n,
                    "innovation": {"kind": self.dgp.innovation.kind,
                                   "omega": self.dgp.innovation.omega,
                                   "alpha": self.dgp.innovation.alpha,
                                   "beta": self.dgp.innovation.beta,
                                   "burn_in": self.dgp.innovation.burn_in},
                    "ell": self.dgp.ell, "rho": self.dgp.rho, "p_dim": self.dgp.p_dim},
            "design": {"kind": self.design.kind, "degree": self.design.degree,
                       "order": self.design.order,
                       "include_intercept": self.design.include_intercept},
            "gamma_star": self.gamma_star, "step": self.step,
            "variance_mode": self.variance_mode, "zeta_mode": self.zeta_mode,
            "kernels": [{"kind": k.kind, "a0": k.a0} for k in self.kernels],
            "tests": [{"functional": t.functional, "c": t.c} for t in self.tests],
            "levels": list(self.levels), "reps": self.reps, "seed": self.seed,
            "critical_values": self.critical_values, "cv_reps": self.cv_reps,
            "n_grid": self.n_grid,
        }


def config_digest(payload):
    """Stable short hash of a JSON-serializable configuration."""
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ExperimentResult:
    """Rejection rates per (kernel, test, level) cell."""

    cells: tuple
    reps: int
    failures: int
    seed: int
    config_hash: str

    def rate(self, kernel_kind, functional, level):
        for cell in self.cells:
            if (cell["kernel"] == kernel_kind and cell["test"] == functional
                    and abs(cell["level"] - level) < 1e-12):
                return cell["rejection_rate"]
        raise KeyError((kernel_kind, functional, level))

    def csv_rows(self):
        header = ["dgp", "n", "design", "p", "gamma_star", "kernel", "a0", "test",
                  "level", "rejection_rate", "reps", "failures", "seed", "config_hash"]
        rows = [header]
        for cell in self.cells:
            rows.append([cell["dgp"], cell["n"], cell["design"], cell["p"],
                         cell["gamma_star"], cell["kernel"], cell["a0"], cell["test"],
                         f"{cell['level']:g}", f"{cell['rejection_rate']:.4f}",
                         self.reps, self.failures, self.seed, self.config_hash])
        return rows

    def format_table(self):
        lines = [f"{'kernel':<10} {'a0':>5} {'test':<12} {'level':>6} {'rate':>8}"]
        for cell in self.cells:
            lines.append(f"{cell['kernel']:<10} {cell['a0']:>5g} {cell['test']:<12} "
                         f"{cell['level']:>6g} {cell['rejection_rate']:>8.4f}")
        if self.failures:
            lines.append(f"(failures: {self.failures} of {self.reps} replications)")
        return "\n".join(lines)


def _resolve_critical_values(config, p_dim):
    """Critical-value map per test spec; exponential tests are always simulated."""
    out = {}
    for test in config.tests:
        if test.functional in ("sup", "avg") and config.critical_values == "bundled":
            out[test.label()] = table_critical_values(
                config.gamma_star, test.functional, config.levels, config.table_path)
        else:
            cfg = LimitPathConfig(
                gamma_star=config.gamma_star, functional=test,
                n_grid=config.n_grid, reps=config.cv_reps,
                seed=config.seed + 911, p_dim=p_dim)
            null = limit_functional_draws(cfg)
            out[test.label()] = null.critical_values(config.levels)
    return out


def run_experiment(config):
    """Run one Monte Carlo cell set: simulate, test, aggregate rejection rates.

    Replications use independent spawned RNG streams off the master seed, so
    results are reproducible and independent of any execution order.
    Per-replication numerical failures are counted, not fatal.
    """
    grid = make_grid(config.gamma_star, config.step)
    states = np.random.SeedSequence(config.seed).spawn(config.reps)
    counts = None
    p_dim = None
    failures = 0
    meta = None
    for r in range(config.reps):
        rng = np.random.default_rng(states[r])
        try:
            sample, meta = gen_dgp(config.dgp, rng)
            dm, y_eff = build_design(sample, config.design)
            if p_dim is None:
                p_dim = dm.p
                cv_maps = _resolve_critical_values(config, p_dim)
                counts = {(k.kind, t.label(), lvl): 0
                          for k in config.kernels for t in config.tests
                          for lvl in config.levels}
            bp = compute_break_process(dm, y_eff, grid, config.variance_mode)
            for kernel in config.kernels:
                har = har_estimate(dm, y_eff, kernel, config.variance_mode,
                                   config.zeta_mode)
                for test in config.tests:
                    stat, _ = compute_statistic(bp, har, test)
                    for lvl in config.levels:
                        if stat > cv_maps[test.label()][lvl]:
                            counts[(kernel.kind, test.label(), lvl)] += 1
        except StrucbreakError:
            failures += 1
    if counts is None:
        raise ConfigError("every replication failed; check the configuration")
    effective = config.reps - failures
    cells = []
    kernel_a0 = {k.kind: k.a0 for k in config.kernels}
    for (kind, label, lvl), cnt in counts.items():
        cells.append({
            "dgp": config.dgp.name, "n": config.dgp.n, "design": config.design.kind,
            "p": p_dim, "gamma_star": config.gamma_star, "kernel": kind,
            "a0": kernel_a0[kind], "test": label, "level": lvl,
            "rejection_rate": cnt / effective if effective else float("nan"),
        })
    return ExperimentResult(cells=tuple(cells), reps=config.reps, failures=failures,
                            seed=config.seed, config_hash=config_digest(config.to_dict()))


# ---------------------------------------------------------------------------
# power envelope
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnvelopeConfig:
    """Power-envelope run: calibration of the exponential weight constant.

    For each c on the grid, the exponentially weighted Wald test matched to
    c is compared against its own simulated null quantile at ``level``; the
    alternative redraws, per replication, a break date uniform on the
    trimmed window and a coefficient shift from the matched Gaussian weight
    (covariance (c / sqrt(p)) sigma0^2 (gamma (1 - gamma) Exx')^{-1},
    applied to the recentred drifting-break regression). Common random
    numbers are reused across the c grid.
    """

    n: int = 300
    degree: int = 2
    gamma_star: float = 0.35
    step: float = DEFAULT_STEP
    reps: int = 300
    null_reps: int = 1000
    c_min: float = 12.0
    c_max: float = 18.0
    c_step: float = 0.05
    level: float = 0.01
    sigma0: float = 1.0
    seed: int = 0

    def to_dict(self):
        return {"n": self.n, "degree": self.degree, "gamma_star": self.gamma_star,
                "step": self.step, "reps": self.reps, "null_reps": self.null_reps,
                "c_min": self.c_min, "c_max": self.c_max, "c_step": self.c_step,
                "level": self.level, "sigma0": self.sigma0, "seed": self.seed}


@dataclass(frozen=True)
class EnvelopeResult:
    c_grid: np.ndarray
    power: np.ndarray
    critical_values: np.ndarray
    solution: float
    seed: int
    config_hash: str


def _split_columns(X, gamma):
    n = X.shape[0]
    k = int(np.floor(n * gamma))
    ind = np.zeros(n)
    ind[k:] = 1.0
    return np.column_stack([X, X * ind[:, None]])


def _residual_forms(X, Y):
    """2x2 Gram matrix of the residuals of the columns of Y on X."""
    coef, _, _, _ = np.linalg.lstsq(X, Y, rcond=None)
    R = Y - X @ coef
    return R.T @ R


def _expw_stats_from_forms(f_full, f_split, p, n, c_grid):
    """log ExpW over the c grid for y = eps + sqrt(c) * u, from cached forms.

    f_full is the 2x2 residual Gram of (eps, u) under the no-break design;
    f_split stacks the same object per grid point. The split-vs-full RSS
    difference gives the homoskedastic Wald value at every (gamma, c).
    """
    s = np.sqrt(c_grid)[:, None]
    rss0 = f_full[0, 0] + 2.0 * s * f_full[0, 1] + s**2 * f_full[1, 1]
    rssg = (f_split[None, :, 0, 0] + 2.0 * s * f_split[None, :, 0, 1]
            + s**2 * f_split[None, :, 1, 1])
    wald = n * (rss0 - rssg) / rssg
    ratio = c_grid[:, None] / np.sqrt(p)
    coef = 0.5 * ratio / (1.0 + ratio)
    return (-(p / 2.0) * np.log1p(ratio[:, 0])
            + logsumexp(coef * wald, axis=1) - np.log(wald.shape[1]))


def power_envelope(config):
    """Map c to the power of the matched exponential test; solve power = 1/2.

    Returns an EnvelopeResult whose solution is the smallest grid c with
    power >= 1/2, linearly interpolated between the straddling grid points.
    Raises NoCrossingError when the curve never reaches 1/2.
    """
    from .design import build_polynomial_basis  # local import to avoid cycle noise

    grid = make_grid(config.gamma_star, config.step)
    c_grid = np.arange(config.c_min, config.c_max + 1e-9, config.c_step)
    if c_grid.size < 2:
        raise ConfigError("need at least two c grid points")
    n = config.n
    states = np.random.SeedSequence(config.seed).spawn(config.null_reps + config.reps)

    def rep_stats(rng, alternative):
        Z = gen_covariates(n, rng)
        X = build_polynomial_basis(Z, config.degree).X
        p = X.shape[1]
        eps = config.sigma0 * rng.standard_normal(n)
        if alternative:
            g0 = rng.uniform(config.gamma_star, 1.0 - config.gamma_star)
            gvec = np.where(np.arange(1, n + 1) / n <= g0, g0 - 1.0, g0)
            shape = rng.standard_normal(p)
            chol = np.linalg.cholesky(X.T @ X / n)
            b_unit = np.linalg.solve(chol.T, shape) * config.sigma0 / np.sqrt(
                g0 * (1.0 - g0) * np.sqrt(p))
            u = gvec * (X @ b_unit) / np.sqrt(n * np.sqrt(p))
        else:
            u = np.zeros(n)
        Y = np.column_stack([eps, u])
        f_full = _residual_forms(X, Y)
        f_split = np.stack([_residual_forms(_split_columns(X, g), Y)
                            for g in grid.points])
        return _expw_stats_from_forms(f_full, f_split, p, n, c_grid)

    null_stats = np.empty((config.null_reps, c_grid.size))
    for r in range(config.null_reps):
        null_stats[r] = rep_stats(np.random.default_rng(states[r]), False)
    cv = np.quantile(null_stats, 1.0 - config.level, axis=0)

    alt_stats = np.empty((config.reps, c_grid.size))
    for r in range(config.reps):
        alt_stats[r] = rep_stats(
            np.random.default_rng(states[config.null_reps + r]), True)
    power = (alt_stats > cv[None, :]).mean(axis=0)

    above = np.nonzero(power >= 0.5)[0]
    if above.size == 0:
        raise NoCrossingError(
            f"power never reaches 1/2 on c in [{config.c_min}, {config.c_max}] "
            f"(max {power.max():.3f})")
    i = int(above[0])
    if i == 0:
        solution = float(c_grid[0])
    else:
        c0, c1 = c_grid[i - 1], c_grid[i]
        p0, p1 = power[i - 1], power[i]
        solution = float(c0 + (0.5 - p0) * (c1 - c0) / (p1 - p0))
    return EnvelopeResult(c_grid=c_grid, power=power, critical_values=cv,
                          solution=solution, seed=config.seed,
                          config_hash=config_digest(config.to_dict()))
