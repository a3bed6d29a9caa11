"""Kernel estimation of the nonlinear serial-correlation factor.

The scalar factor scales the variance of the limit of the recentred Wald
process. It is estimated as a kernel-weighted sum of autocovariances of the
series zeta_t built from standardized score outer products; with no kernel
the factor is fixed at one (uncorrected inference).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, NonFiniteInputError, SingularOmegaError
from .regression import full_sample_omega, ols

KERNELS = ("parzen", "bartlett", "none")
ZETA_MODES = ("last-obs", "ones")

V_HAT_FLOOR = 1e-4

# bandwidth exponents per kernel
_BANDWIDTH_EXPONENT = {"parzen": 0.2, "bartlett": 1.0 / 3.0}


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and bandwidth multiplier a0 (bandwidth = a0 * floor(n^r))."""

    kind: str = "parzen"
    a0: float = 14.0

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ConfigError(f"kernel must be one of {KERNELS}")
        if self.kind != "none" and self.a0 <= 0:
            raise ConfigError("bandwidth multiplier a0 must be positive")


@dataclass(frozen=True)
class HarEstimate:
    v_hat: float
    bandwidth: int
    kernel: KernelSpec
    zeta: np.ndarray
    zeta_mode: str
    floored: bool = False


def kernel_value(spec, x):
    """Evaluate the kernel: symmetric, k(0) = 1, |k| <= 1, support [-1, 1].

    Bartlett: 1 - |x| on the support. Parzen: 1 - 6x^2 + 6|x|^3 for
    |x| <= 1/2, then 2(1 - |x|)^3 up to |x| = 1.
    """
    kind = spec.kind if isinstance(spec, KernelSpec) else spec
    x = np.abs(np.asarray(x, dtype=float))
    if kind == "bartlett":
        out = np.maximum(0.0, 1.0 - x)
    elif kind == "parzen":
        out = np.where(
            x <= 0.5,
            1.0 - 6.0 * x**2 + 6.0 * x**3,
            np.where(x <= 1.0, 2.0 * (1.0 - x) ** 3, 0.0),
        )
    else:
        raise ConfigError(f"kernel_value undefined for kernel kind {kind!r}")
    return out if out.ndim else float(out)


def _integer_part(x):
    # guard against 1000**(1/3) = 9.999999999999998-style floor misses
    return int(np.floor(x + 1e-9))


def bandwidth(spec, n_eff):
    """Bandwidth a0 * floor(n^(1/5)) for Parzen, a0 * floor(n^(1/3)) for Bartlett."""
    if spec.kind == "none":
        return 0
    if n_eff < 1:
        raise ConfigError("n_eff must be >= 1")
    return int(spec.a0 * _integer_part(float(n_eff) ** _BANDWIDTH_EXPONENT[spec.kind]))


def omega_inverse_sqrt(omega):
    """Symmetric PSD inverse square root, eigenvalues floored at 1e-12 * max."""
    omega = np.asarray(omega, dtype=float)
    omega = 0.5 * (omega + omega.T)
    eigval, eigvec = np.linalg.eigh(omega)
    if eigval[-1] <= 0.0:
        raise SingularOmegaError("variance matrix has no positive eigenvalues")
    floored = np.maximum(eigval, 1e-12 * eigval[-1])
    return (eigvec / np.sqrt(floored)) @ eigvec.T


def zeta_series(X, eps_hat, omega_hat, zeta_mode="last-obs"):
    """Scalar series of standardized score contractions.

    With xi_t = Omega^{-1/2} x_t eps_t, mode "last-obs" sets
    zeta_t = xi_n' xi_t / sqrt(p) (anchored at the final observation, the
    form written in the estimator's definition) while mode "ones" sets
    zeta_t = sum_i xi_ti / sqrt(p) (the form the consistency argument
    manipulates). eps_hat must come from the full-sample no-break fit.
    """
    if zeta_mode not in ZETA_MODES:
        raise ConfigError(f"zeta_mode must be one of {ZETA_MODES}")
    X = np.asarray(X, dtype=float)
    eps_hat = np.asarray(eps_hat, dtype=float).ravel()
    if X.shape[0] != eps_hat.size:
        raise ConfigError("X and eps_hat must have the same number of rows")
    p = X.shape[1]
    xi = (X @ omega_inverse_sqrt(omega_hat)) * eps_hat[:, None]
    if zeta_mode == "last-obs":
        return xi @ xi[-1] / np.sqrt(p)
    return xi.sum(axis=1) / np.sqrt(p)


def v_hat(zeta, spec, n_eff):
    """Kernel-weighted sum of autocovariances of zeta.

    Gamma(j) = sum_{t<=n-j} zeta_t zeta_{t+j} / n_eff for every lag (the
    divisor is n_eff throughout), Gamma(-j) = Gamma(j), and the estimate is
    sum_j k(j / bandwidth) Gamma(j). Values below 1e-4 are floored and
    flagged. Kernel "none" returns exactly one.
    """
    zeta = np.asarray(zeta, dtype=float).ravel()
    if zeta.size and not np.isfinite(zeta).all():
        raise NonFiniteInputError("zeta contains non-finite entries")
    if spec.kind == "none":
        return HarEstimate(v_hat=1.0, bandwidth=0, kernel=spec, zeta=zeta,
                           zeta_mode="ones")
    n = int(n_eff)
    bw = bandwidth(spec, n)
    value = float(zeta @ zeta) / n
    for j in range(1, min(bw, zeta.size - 1) + 1):
        k_j = kernel_value(spec, j / bw)
        if k_j == 0.0:
            continue
        value += 2.0 * k_j * float(zeta[:-j] @ zeta[j:]) / n
    floored = value < V_HAT_FLOOR
    return HarEstimate(v_hat=max(value, V_HAT_FLOOR), bandwidth=bw, kernel=spec,
                       zeta=zeta, zeta_mode="", floored=floored)


def har_estimate(dm, y, spec, variance_mode="eicker-white", zeta_mode="last-obs"):
    """Full pipeline from a design to the serial-correlation factor.

    Fits the no-break regression, forms the full-sample variance matrix in
    the requested mode, builds zeta, and applies the kernel sum.
    """
    y = np.asarray(y, dtype=float).ravel()
    if spec.kind == "none":
        est = v_hat(np.zeros(0), spec, dm.n_eff)
        return HarEstimate(v_hat=1.0, bandwidth=0, kernel=spec, zeta=est.zeta,
                           zeta_mode=zeta_mode)
    fit = ols(dm.X, y)
    omega = full_sample_omega(dm.X, fit.residuals, variance_mode)
    zeta = zeta_series(dm.X, fit.residuals, omega, zeta_mode)
    est = v_hat(zeta, spec, dm.n_eff)
    return HarEstimate(v_hat=est.v_hat, bandwidth=est.bandwidth, kernel=spec,
                       zeta=zeta, zeta_mode=zeta_mode, floored=est.floored)
