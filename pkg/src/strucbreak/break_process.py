"""Sweep of the candidate-break grid: the Wald process W_n(gamma) and its
recentred, rescaled version Q_n(gamma) = (W_n(gamma) - p) / sqrt(2p)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import split_design
from .exceptions import ConfigError, InvalidTrimError, SingularVarianceError
from .regression import moment_matrices, ols

DEFAULT_STEP = 1.0 / 200.0

# relative floor for the smallest eigenvalue of B(gamma)
_PD_RTOL = 1e-10


@dataclass(frozen=True)
class BreakGrid:
    """Candidate break fractions gamma* + j*step inside [gamma*, 1 - gamma*]."""

    gamma_star: float
    step: float
    points: np.ndarray

    def __len__(self):
        return self.points.size


def make_grid(gamma_star, step=DEFAULT_STEP):
    """Equally spaced candidate fractions covering [gamma*, 1 - gamma*].

    Both endpoints are included whenever the spacing divides the interval;
    the last point never exceeds 1 - gamma*.
    """
    gamma_star = float(gamma_star)
    step = float(step)
    if not 0.0 < gamma_star < 0.5:
        raise InvalidTrimError(f"gamma_star must lie in (0, 0.5), got {gamma_star}")
    if not 0.0 < step <= gamma_star:
        raise InvalidTrimError(f"step must lie in (0, gamma_star], got {step}")
    n_steps = int(np.floor((1.0 - 2.0 * gamma_star) / step + 1e-9))
    points = gamma_star + step * np.arange(n_steps + 1)
    return BreakGrid(gamma_star=gamma_star, step=step, points=points)


@dataclass(frozen=True)
class BreakProcess:
    """Per-grid-point Wald values and the recentred process.

    q = (wald - p) / sqrt(2p) elementwise; delta2 holds the estimated
    post-break coefficient shift at each grid point (len(grid) x p).
    """

    grid: BreakGrid
    wald: np.ndarray
    q: np.ndarray
    delta2: np.ndarray
    p: int
    n_eff: int
    variance_mode: str

    @property
    def gamma_hat(self):
        """Leftmost maximizer of the recentred process."""
        return float(self.grid.points[int(np.argmax(self.q))])


def wald_at(split, y, variance_mode="eicker-white"):
    """Wald statistic for a zero post-break shift at one split.

    Computes W = n * d2' B^{-1} d2 with B the lower-right p x p block of
    M^{-1} Omega M^{-1}, via factorizations rather than explicit inverses.
    Returns (W, d2).
    """
    y = np.asarray(y, dtype=float).ravel()
    fit = ols(split.X_gamma, y)
    # residuals at rounding level leave no variance to normalize by
    if fit.rss / split.n_eff <= 1e-26 * (y @ y / split.n_eff + 1e-300):
        raise SingularVarianceError(
            f"residuals numerically zero at gamma={split.gamma}; "
            "variance matrix degenerate", gamma=split.gamma)
    mm = moment_matrices(split, fit, variance_mode)
    p = split.p
    # M^{-1} Omega M^{-1}, symmetrized against accumulation error
    inner = np.linalg.solve(mm.m_hat, mm.omega_hat)
    sandwich = np.linalg.solve(mm.m_hat, inner.T).T
    b_mat = sandwich[p:, p:]
    b_mat = 0.5 * (b_mat + b_mat.T)
    eigs = np.linalg.eigvalsh(b_mat)
    if eigs[0] <= _PD_RTOL * max(eigs[-1], 0.0) or eigs[-1] <= 0.0:
        raise SingularVarianceError(
            f"variance matrix B(gamma) not positive definite at gamma={split.gamma} "
            f"(eigenvalue range [{eigs[0]:.3e}, {eigs[-1]:.3e}])",
            gamma=split.gamma,
        )
    delta2 = fit.coef[p:]
    w = float(split.n_eff * delta2 @ np.linalg.solve(b_mat, delta2))
    return (0.0 if abs(w) < 1e-300 else max(w, 0.0)), delta2


def compute_break_process(dm, y, grid, variance_mode="eicker-white"):
    """Evaluate the Wald process over every grid point.

    The sweep refits the full 2p-column regression at each point; grid
    points are independent, and the sequential order here is the reference
    result for any parallel evaluation.
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.size != dm.n_eff:
        raise ConfigError("response length must equal the design row count")
    m = len(grid)
    wald = np.empty(m)
    delta2 = np.empty((m, dm.p))
    for i, gamma in enumerate(grid.points):
        split = split_design(dm, gamma)
        wald[i], delta2[i] = wald_at(split, y, variance_mode)
    q = (wald - dm.p) / np.sqrt(2.0 * dm.p)
    return BreakProcess(grid=grid, wald=wald, q=q, delta2=delta2, p=dm.p,
                        n_eff=dm.n_eff, variance_mode=variance_mode)
