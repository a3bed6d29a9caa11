"""Simulation of the limiting objects: critical-value tables, p-value draws,
the bivariate Gaussian-process path construction, the tied-down Bessel
process, and the fixed-dimension critical-value transformation.

Two distinct simulation conventions coexist on purpose.

* The tabulation convention draws the limit variable independently at each
  point of the fine grid Gamma(N) and takes the functional across points.
  This is the convention behind the published critical-value table this
  package bundles (the table is tied to N = 3600), and it is what
  ``critical_values`` and p-value simulation use, so that simulated and
  bundled critical values agree.

* The path conventions simulate the limit process with its cross-gamma
  dependence: ``simulate_wwbar_paths`` builds the bivariate pair (W, Wbar)
  through discretized stochastic integrals whose covariances reproduce the
  limit kernel, and ``simulate_limit_sup`` draws the supremum of the
  dependent Gaussian limit of the recentred process directly through its
  Markov representation in log-odds time. The latter is the reference point
  the growing-dimension Bessel suprema converge to.
"""

from __future__ import annotations

import csv
import importlib.resources
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .exceptions import ConfigError, DataError, InvalidTrimError
from .test_stats import TestSpec

DEFAULT_N_GRID = 3600
DEFAULT_REPS = 10_000
TABLE_ENV_VAR = "STRUCBREAK_CRITVALS"
TABLE_LEVELS = (0.01, 0.05, 0.10)

_CHUNK = 512


@dataclass(frozen=True)
class LimitPathConfig:
    """Configuration for limit-distribution simulation."""

    gamma_star: float
    functional: TestSpec = field(default_factory=TestSpec)
    n_grid: int = DEFAULT_N_GRID
    reps: int = DEFAULT_REPS
    seed: int = 0
    p_dim: int | None = None  # only used by the expw functional

    def __post_init__(self):
        if not 0.0 < self.gamma_star < 0.5:
            raise InvalidTrimError(f"gamma_star must lie in (0, 0.5), got {self.gamma_star}")
        if self.n_grid < 100:
            raise ConfigError("n_grid must be >= 100")
        if self.reps < 100:
            raise ConfigError("reps must be >= 100")
        if self.functional.functional == "expw" and not self.p_dim:
            raise ConfigError("expw null simulation needs p_dim")


@dataclass(frozen=True)
class NullDistribution:
    """Sorted draws of a limit functional, with cached quantiles."""

    draws: np.ndarray
    config: LimitPathConfig

    def __post_init__(self):
        draws = np.sort(np.asarray(self.draws, dtype=float))
        object.__setattr__(self, "draws", draws)

    def quantile(self, prob):
        return float(np.quantile(self.draws, prob))

    def critical_values(self, levels=TABLE_LEVELS):
        return {float(a): self.quantile(1.0 - a) for a in levels}


def trimmed_indices(n_grid, gamma_star):
    """Indices j with gamma* <= j / n_grid <= 1 - gamma*, endpoints included."""
    j0 = int(np.ceil(gamma_star * n_grid - 1e-9))
    j1 = int(np.floor((1.0 - gamma_star) * n_grid + 1e-9))
    return np.arange(j0, j1 + 1)


# ---------------------------------------------------------------------------
# bivariate path construction (W, Wbar)
# ---------------------------------------------------------------------------

def simulate_wwbar_paths(n_grid, reps, seed=0, gammas=None):
    """Paths of the bivariate pair (W, Wbar) on the grid j / n_grid.

    Discretized (left-endpoint) stochastic integrals of a single standard
    Brownian path: W(g_k) = sqrt(2) sum_{j<=k} B_{j-1} dB_j and
    Wbar(g_k) = sqrt(2) [S_k - B_k (B_1 - B_k)] with S_k the matching suffix
    sum, all computed by prefix/suffix accumulation. The covariances
    reproduce the limit kernel: var-type blocks (g1 ^ g2)^2 and
    (1 - g1 v g2)^2, cross block 1{g1 > g2} (g1 - g2)^2.

    With ``gammas`` only those probe points (snapped to the grid) are kept,
    so large replication counts stay cheap on memory. Returns
    (gamma, W, Wbar, w_one) with W, Wbar of shape (reps, len(gamma)) and
    w_one the reps values of W at 1.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    N = int(n_grid)
    if gammas is None:
        cols = np.arange(N + 1)
    else:
        cols = np.clip(np.rint(np.atleast_1d(np.asarray(gammas, dtype=float)) * N)
                       .astype(int), 0, N)
    gamma = cols / N
    W = np.empty((reps, cols.size))
    Wbar = np.empty((reps, cols.size))
    w_one = np.empty(reps)
    for start in range(0, reps, _CHUNK):
        stop = min(start + _CHUNK, reps)
        b = stop - start
        dB = rng.standard_normal((b, N)) / np.sqrt(N)
        B = np.concatenate([np.zeros((b, 1)), np.cumsum(dB, axis=1)], axis=1)
        term = B[:, :-1] * dB
        prefix = np.concatenate([np.zeros((b, 1)), np.cumsum(term, axis=1)], axis=1)
        suffix = prefix[:, -1:] - prefix
        w_full = np.sqrt(2.0) * prefix
        wbar_full = np.sqrt(2.0) * (suffix - B * (B[:, -1:] - B))
        W[start:stop] = w_full[:, cols]
        Wbar[start:stop] = wbar_full[:, cols]
        w_one[start:stop] = w_full[:, -1]
    return gamma, W, Wbar, w_one


def simulate_q_path(n_grid, gamma_star, seed=0, reps=1):
    """Recentred-process paths Q = W/g + Wbar/(1-g) - W(1) on the trimmed grid.

    Returns (gamma_trimmed, q) with q of shape (reps, len(gamma_trimmed)).
    """
    idx = trimmed_indices(n_grid, gamma_star)
    g = idx / n_grid
    _, W, Wbar, w_one = simulate_wwbar_paths(n_grid, reps, seed, gammas=g)
    q = W / g + Wbar / (1.0 - g) - w_one[:, None]
    return g, q


def simulate_limit_paths(gamma_star, n_grid, reps, seed=0):
    """Paths of the dependent Gaussian limit of the recentred process.

    Exact draws via the Markov property in log-odds time:
    corr(Q(g1), Q(g2)) = exp(-|logit g2 - logit g1|) with unit variance.
    Returns (gamma_trimmed, q) with q of shape (reps, len(gamma_trimmed)).
    """
    idx = trimmed_indices(n_grid, gamma_star)
    g = idx / n_grid
    h = np.log(g / (1.0 - g))
    r = np.exp(-np.diff(h))
    innov_sd = np.sqrt(1.0 - r**2)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    out = np.empty((reps, g.size))
    for start in range(0, reps, _CHUNK):
        stop = min(start + _CHUNK, reps)
        z = rng.standard_normal((stop - start, g.size))
        q = np.empty_like(z)
        q[:, 0] = z[:, 0]
        for k in range(1, g.size):
            q[:, k] = r[k - 1] * q[:, k - 1] + innov_sd[k - 1] * z[:, k]
        out[start:stop] = q
    return g, out


# ---------------------------------------------------------------------------
# tabulation convention: independent draws at each grid point
# ---------------------------------------------------------------------------

def _functional_reduce(q_block, spec, p_dim):
    if spec.functional == "sup":
        return q_block.max(axis=1)
    if spec.functional == "avg":
        return q_block.mean(axis=1)
    if spec.functional == "expq":
        scale = spec.c / np.sqrt(2.0)
        return (np.sqrt(2.0) / spec.c) * (
            logsumexp(scale * q_block, axis=1) - np.log(q_block.shape[1])
        )
    # expw: map the standardized draws back to the Wald scale
    w_block = p_dim + np.sqrt(2.0 * p_dim) * q_block
    ratio = spec.c / np.sqrt(p_dim)
    coef = 0.5 * ratio / (1.0 + ratio)
    return (-(p_dim / 2.0) * np.log1p(ratio)
            + logsumexp(coef * w_block, axis=1) - np.log(w_block.shape[1]))


def limit_functional_draws(config):
    """Draws of the limit functional under the tabulation convention.

    At each trimmed grid point the standardized limit variable is drawn as
    an independent standard normal (one fresh realization per point per
    replication), and the functional is taken across points. The bundled
    critical-value table was produced under exactly this convention at
    N = 3600, which makes its quantiles grid-resolution specific; use the
    same n_grid when comparing against it.
    """
    idx = trimmed_indices(config.n_grid, config.gamma_star)
    m = idx.size
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    out = np.empty(config.reps)
    for start in range(0, config.reps, _CHUNK):
        stop = min(start + _CHUNK, config.reps)
        q = rng.standard_normal((stop - start, m))
        out[start:stop] = _functional_reduce(q, config.functional, config.p_dim)
    return NullDistribution(draws=out, config=config)


def critical_values(config, levels=TABLE_LEVELS):
    """Simulate the null distribution and tabulate upper quantiles."""
    null = limit_functional_draws(config)
    return null, null.critical_values(levels)


# ---------------------------------------------------------------------------
# dependent-path references
# ---------------------------------------------------------------------------

def simulate_limit_sup(gamma_star, n_grid=DEFAULT_N_GRID, reps=DEFAULT_REPS, seed=0):
    """Supremum draws of the dependent Gaussian limit of the recentred process.

    The limit (unit serial-correlation factor) is a stationary Gaussian
    process in log-odds time: corr(Q(g1), Q(g2)) = exp(-|logit g2 - logit g1|),
    which is Markov, so paths are drawn exactly by an AR(1) recursion across
    grid points. This is the law the standardized Bessel suprema approach as
    the dimension grows.
    """
    cfg = LimitPathConfig(gamma_star=gamma_star, functional=TestSpec("sup"),
                          n_grid=n_grid, reps=reps, seed=seed)
    _, q = simulate_limit_paths(gamma_star, n_grid, reps, seed)
    return NullDistribution(draws=q.max(axis=1), config=cfg)


@dataclass(frozen=True)
class BesselConfig:
    """Configuration for tied-down Bessel process simulation."""

    p: int
    n_grid: int = 720
    reps: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise ConfigError("p must be >= 1")
        if self.n_grid < 10:
            raise ConfigError("n_grid must be >= 10")


def simulate_bessel_process(config, gammas):
    """Values of the normalized tied-down Bessel process at given fractions.

    Simulates p independent Brownian paths on the grid, ties them down at 1,
    and forms |B_p(g) - g B_p(1)|^2 / (g (1 - g)) at each requested g
    (snapped to the nearest grid point). Returns an array (reps, len(gammas)).
    """
    N = config.n_grid
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    cols = np.clip(np.rint(gammas * N).astype(int), 1, N - 1)
    g = cols / N
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    out = np.empty((config.reps, cols.size))
    chunk = max(1, int(8e6 / (config.p * N)))
    for start in range(0, config.reps, chunk):
        stop = min(start + chunk, config.reps)
        b = stop - start
        dB = rng.standard_normal((b, config.p, N)) / np.sqrt(N)
        B = np.cumsum(dB, axis=2)
        bridge = B[:, :, cols - 1] - g[None, None, :] * B[:, :, -1:]
        out[start:stop] = (bridge**2).sum(axis=1) / (g * (1.0 - g))
    return out


def simulate_bessel_sup(config, gamma_star, standardized=True):
    """Supremum over the trimmed grid of the (standardized) Bessel process.

    With ``standardized`` the draws are of sup (W_p - p) / sqrt(2p), the
    scale on which the process converges to the dependent Gaussian limit as
    p grows; otherwise raw sup W_p.
    """
    idx = trimmed_indices(config.n_grid, gamma_star)
    idx = idx[(idx > 0) & (idx < config.n_grid)]
    gammas = idx / config.n_grid
    paths = simulate_bessel_process(config, gammas)
    if standardized:
        draws = ((paths - config.p) / np.sqrt(2.0 * config.p)).max(axis=1)
    else:
        draws = paths.max(axis=1)
    cfg = LimitPathConfig(gamma_star=gamma_star, functional=TestSpec("sup"),
                          n_grid=config.n_grid, reps=config.reps, seed=config.seed)
    return NullDistribution(draws=draws, config=cfg)


# ---------------------------------------------------------------------------
# fixed-dimension critical-value transformation
# ---------------------------------------------------------------------------

def andrews_transform(c_alpha, p, v_hat=1.0):
    """Map a fixed-p supremum-Wald critical value to the recentred scale.

    Returns (c_alpha - p) * sqrt(v_hat / (2 p)), the threshold to compare
    against the scaled supremum of the recentred process.
    """
    if p < 1:
        raise ConfigError("p must be >= 1")
    if not v_hat > 0:
        raise ConfigError("v_hat must be positive")
    return float((c_alpha - p) * np.sqrt(v_hat / (2.0 * p)))


def andrews_inverse(c_star, p, v_hat=1.0):
    """Inverse map: recentred-scale threshold back to the Wald scale."""
    if p < 1:
        raise ConfigError("p must be >= 1")
    if not v_hat > 0:
        raise ConfigError("v_hat must be positive")
    return float(c_star * np.sqrt(2.0 * p / v_hat) + p)


# ---------------------------------------------------------------------------
# bundled critical-value table
# ---------------------------------------------------------------------------

def _bundled_table_path():
    return importlib.resources.files("strucbreak").joinpath("data/critical_values.csv")


def load_critical_value_table(path=None):
    """Load a critical-value table CSV.

    Resolution order: explicit path, the STRUCBREAK_CRITVALS environment
    variable, then the bundled table. Returns a mapping
    {(gamma_star, level): {"sup": cv, "avg": cv}}.
    """
    if path is None:
        path = os.environ.get(TABLE_ENV_VAR)
    table = {}
    try:
        if path is None:
            text = _bundled_table_path().read_text()
            rows = list(csv.DictReader(text.splitlines()))
        else:
            with open(path, newline="") as fh:
                rows = list(csv.DictReader(fh))
    except FileNotFoundError as exc:
        raise DataError(f"critical-value table not found: {path}") from exc
    for row in rows:
        try:
            key = (round(float(row["gamma_star"]), 6), round(float(row["level"]), 6))
            table[key] = {"sup": float(row["sup_cv"]), "avg": float(row["avg_cv"])}
        except (KeyError, ValueError) as exc:
            raise DataError(f"malformed critical-value table row: {row}") from exc
    if not table:
        raise DataError("critical-value table is empty")
    return table


def table_critical_values(gamma_star, functional, levels=TABLE_LEVELS, path=None):
    """Critical values for one trimming and functional from a table file."""
    table = load_critical_value_table(path)
    key_gs = round(float(gamma_star), 6)
    out = {}
    for level in levels:
        key = (key_gs, round(float(level), 6))
        if key not in table:
            available = sorted({gs for gs, _ in table})
            raise ConfigError(
                f"no tabulated critical value for gamma_star={gamma_star}, "
                f"level={level}; tabulated trimmings: {available}"
            )
        out[float(level)] = table[key][functional]
    return out


def write_critical_value_table(path, entries):
    """Write table rows with fixed 4-decimal values.

    ``entries`` maps (gamma_star, level) to {"sup": value, "avg": value}.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma_star", "level", "sup_cv", "avg_cv"])
        for (gs, level) in sorted(entries):
            cvs = entries[(gs, level)]
            writer.writerow([f"{gs:.2f}", f"{level:.2f}",
                             f"{cvs['sup']:.4f}", f"{cvs['avg']:.4f}"])
