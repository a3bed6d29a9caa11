"""Least squares on full and split designs, and the second-moment and
variance estimators feeding the Wald statistic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import VARIANCE_MODES
from .exceptions import ConfigError, NonFiniteInputError, RankDeficientError


@dataclass(frozen=True)
class OlsFit:
    coef: np.ndarray
    residuals: np.ndarray
    rss: float
    singular_values: np.ndarray

    @property
    def smallest_singular_value(self):
        return float(self.singular_values[-1])


def ols(X, y):
    """Least squares via SVD-based orthogonal factorization.

    Raises RankDeficientError (reporting the smallest singular value) when
    the numerical rank falls short of the column count; never forms the
    normal equations.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] < X.shape[1]:
        raise ConfigError("X must be a matrix with at least as many rows as columns")
    if X.shape[0] != y.size:
        raise ConfigError("X and y must have the same number of rows")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NonFiniteInputError("ols inputs contain non-finite entries")
    # rank tolerance: max(n, p) * eps * largest singular value
    coef, _, rank, sv = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise RankDeficientError(
            f"regressor matrix has numerical rank {rank} < {X.shape[1]} "
            f"(smallest singular value {sv[-1]:.3e})",
            smallest_singular_value=float(sv[-1]),
        )
    residuals = y - X @ coef
    return OlsFit(coef=coef, residuals=residuals, rss=float(residuals @ residuals),
                  singular_values=sv)


@dataclass(frozen=True)
class MomentMatrices:
    """M(gamma), Omega(gamma) and, in homoskedastic mode, sigma^2(gamma).

    Homoskedastic mode satisfies Omega = sigma2 * M exactly (by construction,
    not up to rounding).
    """

    m_hat: np.ndarray
    omega_hat: np.ndarray
    variance_mode: str
    sigma2_hat: float | None = None


def moment_matrices(split, fit, variance_mode="eicker-white"):
    """Second-moment matrix and variance estimator on a split design.

    M = X'X / n_eff. Eicker-White mode sets Omega = sum_t x_t x_t' e_t^2 / n_eff;
    homoskedastic mode sets sigma2 = rss / n_eff and Omega = sigma2 * M. No
    degrees-of-freedom correction anywhere.
    """
    if variance_mode not in VARIANCE_MODES:
        raise ConfigError(f"variance_mode must be one of {VARIANCE_MODES}")
    X = split.X_gamma
    n = X.shape[0]
    m_hat = X.T @ X / n
    if variance_mode == "eicker-white":
        Xe = X * fit.residuals[:, None]
        omega_hat = Xe.T @ Xe / n
        return MomentMatrices(m_hat=m_hat, omega_hat=omega_hat,
                              variance_mode=variance_mode)
    sigma2 = fit.rss / n
    return MomentMatrices(m_hat=m_hat, omega_hat=sigma2 * m_hat,
                          variance_mode=variance_mode, sigma2_hat=sigma2)


def full_sample_omega(X, residuals, variance_mode="eicker-white"):
    """p x p variance estimator from the no-break regression."""
    if variance_mode not in VARIANCE_MODES:
        raise ConfigError(f"variance_mode must be one of {VARIANCE_MODES}")
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if variance_mode == "eicker-white":
        Xe = X * np.asarray(residuals, dtype=float)[:, None]
        return Xe.T @ Xe / n
    sigma2 = float(residuals @ residuals) / n
    return sigma2 * (X.T @ X / n)
