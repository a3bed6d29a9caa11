"""Regressor construction: polynomial sieve bases, AR lag embeddings, raw
columns, and break-interacted ("split") designs.

The column count of the design, including any intercept, is the restriction
count ``p`` used by every downstream normalization: an AR fit of order q has
p = q + 1, a polynomial basis of total degree d in k covariates has
p = C(k + d, d).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    BreakGridInfeasibleError,
    ConfigError,
    NonFiniteInputError,
    RankDeficientError,
    SampleTooShortError,
)

VARIANCE_MODES = ("eicker-white", "homoskedastic")


def _as_finite_matrix(Z, name="Z"):
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.ndim != 2:
        raise ConfigError(f"{name} must be one- or two-dimensional")
    if Z.size and not np.isfinite(Z).all():
        raise NonFiniteInputError(f"{name} contains non-finite entries")
    return Z


def _as_finite_vector(y, name="y"):
    y = np.asarray(y, dtype=float).ravel()
    if y.size < 1:
        raise ConfigError(f"{name} must contain at least one observation")
    if not np.isfinite(y).all():
        raise NonFiniteInputError(f"{name} contains non-finite entries")
    return y


@dataclass(frozen=True)
class RawSample:
    """Response vector plus an n x k covariate matrix (k may be zero)."""

    y: np.ndarray
    Z: np.ndarray

    def __post_init__(self):
        y = _as_finite_vector(self.y)
        Z = _as_finite_matrix(self.Z) if np.size(self.Z) else np.empty((y.size, 0))
        if Z.shape[0] != y.size:
            raise ConfigError("y and Z must have the same number of rows")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "Z", Z)

    @property
    def n(self):
        return self.y.size

    @property
    def k(self):
        return self.Z.shape[1]


@dataclass(frozen=True)
class DesignSpec:
    """How raw data become the p-column regressor matrix.

    kind is one of ``"polynomial"`` (sieve basis of total degree ``degree``),
    ``"ar"`` (lag embedding of order ``order``), or ``"raw"`` (user columns).
    Polynomial and AR designs always carry an intercept.
    """

    kind: str
    degree: int = 2
    order: int = 1
    include_intercept: bool = True

    def __post_init__(self):
        if self.kind not in ("polynomial", "ar", "raw"):
            raise ConfigError(f"unknown design kind {self.kind!r}")
        if self.kind == "polynomial" and self.degree < 0:
            raise ConfigError("polynomial degree must be >= 0")
        if self.kind == "ar" and self.order < 1:
            raise ConfigError("AR order must be >= 1")
        if self.kind in ("polynomial", "ar"):
            object.__setattr__(self, "include_intercept", True)

    @staticmethod
    def polynomial(degree):
        return DesignSpec(kind="polynomial", degree=degree)

    @staticmethod
    def ar_lags(order):
        return DesignSpec(kind="ar", order=order)

    @staticmethod
    def raw_columns(include_intercept=True):
        return DesignSpec(kind="raw", include_intercept=include_intercept)

    def n_columns(self, n_covariates):
        """Column count p implied by this spec for k covariates."""
        if self.kind == "polynomial":
            return math.comb(n_covariates + self.degree, self.degree)
        if self.kind == "ar":
            return self.order + 1
        return n_covariates + int(self.include_intercept)


@dataclass(frozen=True)
class DesignMatrix:
    """Realized n_eff x p design with per-column labels."""

    X: np.ndarray
    labels: tuple = field(default=())

    def __post_init__(self):
        X = _as_finite_matrix(self.X, "X")
        labels = tuple(self.labels) if self.labels else tuple(
            f"col{i}" for i in range(X.shape[1])
        )
        if len(labels) != X.shape[1]:
            raise ConfigError("label count must match column count")
        if X.shape[0] <= 2 * X.shape[1]:
            raise SampleTooShortError(
                f"need n_eff > 2p rows, got n_eff={X.shape[0]} with p={X.shape[1]}"
            )
        _check_full_rank(X)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", labels)

    @property
    def n_eff(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class SplitDesign:
    """Break-interacted design: row t is (x_t', x_t' 1{t/n_eff > gamma})."""

    gamma: float
    X_gamma: np.ndarray
    split_index: int

    @property
    def n_eff(self):
        return self.X_gamma.shape[0]

    @property
    def p(self):
        return self.X_gamma.shape[1] // 2


def _check_full_rank(X):
    sv = np.linalg.svd(X, compute_uv=False)
    tol = max(X.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
    if sv.size and sv[-1] <= tol:
        raise RankDeficientError(
            f"design matrix numerically rank deficient "
            f"(smallest singular value {sv[-1]:.3e})",
            smallest_singular_value=float(sv[-1]),
        )


def _monomial_exponents(n_covariates, degree):
    """Exponent tuples in graded lexicographic order, intercept first."""
    out = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(n_covariates), total):
            exps = [0] * n_covariates
            for j in combo:
                exps[j] += 1
            out.append(tuple(exps))
    return out


def build_polynomial_basis(Z, degree):
    """All monomials of total degree <= degree in the columns of Z.

    Columns come in graded lexicographic order with the intercept first, so
    k = 2, degree = 2 yields (1, z1, z2, z1^2, z1 z2, z2^2) and the column
    count is C(k + degree, degree).
    """
    Z = _as_finite_matrix(Z)
    n, k = Z.shape
    cols = []
    labels = []
    for exps in _monomial_exponents(k, degree):
        col = np.ones(n)
        parts = []
        for j, e in enumerate(exps):
            if e:
                col = col * Z[:, j] ** e
                parts.append(f"z{j + 1}" + (f"^{e}" if e > 1 else ""))
        cols.append(col)
        labels.append("*".join(parts) if parts else "1")
    return DesignMatrix(np.column_stack(cols), tuple(labels))


def build_ar_design(y, order):
    """Lag embedding: row t is (1, y_{t+q-1}, ..., y_t) predicting y_{t+q}.

    The first ``order`` observations are dropped (no zero padding), so
    n_eff = n - order and p = order + 1.
    """
    y = _as_finite_vector(y)
    q = int(order)
    if q < 1:
        raise ConfigError("AR order must be >= 1")
    n = y.size
    if n <= q + 2 * (q + 1):
        raise SampleTooShortError(
            f"series of length {n} too short for AR order {q} with a split "
            f"(need > {q + 2 * (q + 1)})"
        )
    n_eff = n - q
    X = np.ones((n_eff, q + 1))
    labels = ["1"]
    for j in range(1, q + 1):
        X[:, j] = y[q - j:n - j]
        labels.append(f"y[t-{j}]")
    return DesignMatrix(X, tuple(labels)), y[q:]


def build_raw_design(Z, include_intercept=True):
    """User-supplied columns, optionally with a prepended intercept."""
    Z = _as_finite_matrix(Z)
    if include_intercept:
        X = np.column_stack([np.ones(Z.shape[0]), Z])
        labels = ("1",) + tuple(f"z{j + 1}" for j in range(Z.shape[1]))
    else:
        X = Z.copy()
        labels = tuple(f"z{j + 1}" for j in range(Z.shape[1]))
    return DesignMatrix(X, labels)


def build_design(sample, spec):
    """Dispatch a DesignSpec against a RawSample.

    Returns (DesignMatrix, y_eff); AR designs shorten the response by the
    presample, the others return it unchanged.
    """
    if spec.kind == "polynomial":
        return build_polynomial_basis(sample.Z, spec.degree), sample.y
    if spec.kind == "ar":
        return build_ar_design(sample.y, spec.order)
    dm = build_raw_design(sample.Z, spec.include_intercept)
    return dm, sample.y


def split_design(dm, gamma):
    """Interact the design with the break indicator 1{t/n_eff > gamma}.

    The split index is floor(n_eff * gamma): rows 1..k* keep a zero second
    block. Each regime must retain at least p + 2 rows.
    """
    gamma = float(gamma)
    if not 0.0 < gamma < 1.0:
        raise BreakGridInfeasibleError(f"gamma must lie in (0, 1), got {gamma}", gamma=gamma)
    n, p = dm.X.shape
    k_star = int(np.floor(n * gamma))
    if k_star < p + 2 or n - k_star < p + 2:
        raise BreakGridInfeasibleError(
            f"break fraction {gamma} leaves a regime with fewer than p + 2 = {p + 2} rows "
            f"(split index {k_star} of {n})",
            gamma=gamma,
        )
    indicator = np.zeros(n)
    indicator[k_star:] = 1.0
    X_gamma = np.column_stack([dm.X, dm.X * indicator[:, None]])
    return SplitDesign(gamma=gamma, X_gamma=X_gamma, split_index=k_star)
