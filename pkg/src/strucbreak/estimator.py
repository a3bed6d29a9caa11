"""Scikit-learn style front end.

``StructuralBreakTest`` is a fit-shaped estimator: ``fit(X, y)`` runs the
whole pipeline (design construction, Wald sweep, serial-correlation factor,
statistic, decision) and exposes the outcome through fitted attributes, so
the test composes with ``get_params`` / ``set_params`` / ``clone`` and the
rest of the scikit-learn ecosystem.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from .break_process import DEFAULT_STEP, compute_break_process, make_grid
from .design import DesignSpec, RawSample, build_design
from .exceptions import ConfigError
from .har import KernelSpec, har_estimate
from .null_sim import (LimitPathConfig, limit_functional_draws,
                       table_critical_values)
from .test_stats import (TestSpec, compute_statistic, decide, report_from_table)


class StructuralBreakTest(BaseEstimator):
    """Test for a structural break at an unknown date in a growing-dimension
    linear regression.

    Parameters
    ----------
    design : {"polynomial", "ar", "raw"}
        How regressors are built: a polynomial sieve basis over the columns
        of X, an autoregressive lag embedding of the series, or the raw
        columns of X.
    degree : int
        Total degree of the polynomial basis (polynomial design).
    ar_order : int
        Lag order q of the AR design (p = q + 1 including the intercept).
    include_intercept : bool
        Prepend an intercept column (raw design only; sieve and AR designs
        always carry one).
    gamma_star : float
        Trimming: candidate break fractions lie in [gamma_star, 1 - gamma_star].
    step : float
        Grid spacing of candidate fractions.
    variance_mode : {"homoskedastic", "eicker-white"}
        Variance estimator inside the Wald statistic.
    kernel : {"parzen", "bartlett", "none"}
        Kernel for the serial-correlation factor; "none" skips the correction.
    a0 : float
        Bandwidth multiplier (bandwidth = a0 * floor(n^(1/5)) for Parzen,
        a0 * floor(n^(1/3)) for Bartlett).
    zeta_mode : {"ones", "last-obs"}
        Aggregation of the standardized scores in the factor estimate.
    functional : {"sup", "avg", "expq", "expw"}
        Test statistic reduction of the break process.
    c : float
        Weight constant of the exponential functionals.
    critical_values : {"bundled", "simulate"}
        Source of critical values. Exponential functionals are always
        simulated. Simulation also yields a p-value.
    levels : tuple of float
        Test levels to report decisions for.
    n_grid, cv_reps : int
        Fine-grid resolution and replication count for simulated critical
        values.
    table_path : str or None
        Critical-value table override (defaults to the bundled table or the
        STRUCBREAK_CRITVALS environment variable).
    random_state : int
        Seed for critical-value simulation.

    Attributes
    ----------
    report_ : TestReport
    statistic_, p_value_, gamma_hat_, v_hat_ : float
    critical_values_ : dict level -> critical value
    decisions_ : dict level -> bool
    break_process_ : BreakProcess
    har_ : HarEstimate
    n_eff_, p_ : int

    Examples
    --------
    >>> import numpy as np
    >>> from strucbreak import StructuralBreakTest
    >>> rng = np.random.default_rng(0)
    >>> Z = rng.uniform(0, 5, size=(400, 2))
    >>> y = np.where(np.arange(400) < 200, 1.5, 0.2) * np.log1p(Z[:, 0]) \
    ...     + rng.standard_normal(400)
    >>> test = StructuralBreakTest(degree=2, kernel="parzen", a0=14)
    >>> test.fit(Z, y).rejected_
    True
    """

    def __init__(self, design="polynomial", degree=2, ar_order=1,
                 include_intercept=True, gamma_star=0.35, step=DEFAULT_STEP,
                 variance_mode="homoskedastic", kernel="parzen", a0=14.0,
                 zeta_mode="ones", functional="sup", c=15.0,
                 critical_values="bundled", levels=(0.01, 0.05, 0.10),
                 n_grid=3600, cv_reps=10_000, table_path=None, random_state=0):
        self.design = design
        self.degree = degree
        self.ar_order = ar_order
        self.include_intercept = include_intercept
        self.gamma_star = gamma_star
        self.step = step
        self.variance_mode = variance_mode
        self.kernel = kernel
        self.a0 = a0
        self.zeta_mode = zeta_mode
        self.functional = functional
        self.c = c
        self.critical_values = critical_values
        self.levels = levels
        self.n_grid = n_grid
        self.cv_reps = cv_reps
        self.table_path = table_path
        self.random_state = random_state

    def _design_spec(self):
        if self.design == "polynomial":
            return DesignSpec.polynomial(self.degree)
        if self.design == "ar":
            return DesignSpec.ar_lags(self.ar_order)
        if self.design == "raw":
            return DesignSpec.raw_columns(self.include_intercept)
        raise ConfigError(f"unknown design {self.design!r}")

    def fit(self, X, y=None):
        """Run the break test.

        For regression designs X holds the covariates and y the response.
        For the AR design the series is y if given, otherwise a
        one-dimensional X.
        """
        spec = self._design_spec()
        if spec.kind == "ar":
            series = column_or_1d(y if y is not None else np.asarray(X).squeeze())
            sample = RawSample(y=series, Z=np.empty((series.size, 0)))
        else:
            if y is None:
                raise ConfigError("y is required for regression designs")
            Xv = check_array(X, ensure_2d=True, dtype=float)
            yv = column_or_1d(y)
            sample = RawSample(y=yv, Z=Xv)

        dm, y_eff = build_design(sample, spec)
        grid = make_grid(self.gamma_star, self.step)
        bp = compute_break_process(dm, y_eff, grid, self.variance_mode)
        har = har_estimate(dm, y_eff, KernelSpec(self.kernel, self.a0),
                           self.variance_mode, self.zeta_mode)
        test_spec = TestSpec(self.functional, self.c)
        stat, gamma_hat = compute_statistic(bp, har, test_spec)

        warnings = []
        if self.kernel == "none":
            warnings.append("uncorrected: serial-correlation factor fixed at 1")
        if har.floored:
            warnings.append("serial-correlation factor was floored at 1e-4")

        if test_spec.functional in ("sup", "avg") and self.critical_values == "bundled":
            cvs = table_critical_values(self.gamma_star, test_spec.functional,
                                        self.levels, self.table_path)
            report = report_from_table(stat, cvs, test_spec.functional,
                                       v_hat=har.v_hat, gamma_hat=gamma_hat,
                                       c=test_spec.c if test_spec.functional in
                                       ("expq", "expw") else None,
                                       warnings=warnings)
        else:
            cfg = LimitPathConfig(gamma_star=self.gamma_star, functional=test_spec,
                                  n_grid=self.n_grid, reps=self.cv_reps,
                                  seed=self.random_state, p_dim=dm.p)
            null = limit_functional_draws(cfg)
            report = decide(stat, null, self.levels, spec=test_spec,
                            v_hat=har.v_hat, gamma_hat=gamma_hat,
                            warnings=warnings)

        self.design_ = dm
        self.break_process_ = bp
        self.har_ = har
        self.report_ = report
        self.statistic_ = report.statistic
        self.p_value_ = report.p_value
        self.gamma_hat_ = gamma_hat
        self.v_hat_ = har.v_hat
        self.critical_values_ = report.critical_values
        self.decisions_ = report.decisions
        self.n_eff_ = dm.n_eff
        self.p_ = dm.p
        self.rejected_ = report.decisions[min(report.decisions, key=lambda a: abs(a - 0.05))]
        return self

    def decision(self, level=0.05):
        """Rejection decision at one of the fitted levels."""
        check_is_fitted(self, "report_")
        if level not in self.decisions_:
            raise ConfigError(f"level {level} not among fitted levels "
                              f"{sorted(self.decisions_)}")
        return self.decisions_[level]
