"""scikit-learn style front ends.

The estimators take an LTI system as the training input: ``fit`` computes
the gramian factors and the projection, ``predict`` evaluates the reduced
transfer function and ``transform`` maps full states to reduced
coordinates.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from rkmor.analysis import check_composite_hypothesis, verify_interpolation
from rkmor.balancing import (Truncation, approximate_balance,
                             exact_balanced_truncation, realify)
from rkmor.io import load_tableau
from rkmor.quadrature import log_schedule, run_quadrature
from rkmor.system import GramianKind, transfer_function
from rkmor.tableau import assemble_composite, predict_expansion_points
from rkmor.validation import check_points, check_steps, check_system


class GramianQuadrature(BaseEstimator):
    """Low-rank gramian factor by Runge-Kutta quadrature.

    Parameters
    ----------
    tableau : str, dict or ButcherTableau
        Built-in name, JSON-style dict or tableau object.
    steps : array-like, optional
        Step sizes. Defaults to 20 log-spaced steps in ``[1e-2, 1e2]``.
    kind : {"controllability", "observability"}
    keep_zero_weight : bool
        Keep columns with zero gramian weight.
    check_stability : bool
        Verify that ``A`` is stable before running.
    """

    def __init__(self, tableau="implicit_midpoint", steps=None, kind="controllability",
                 keep_zero_weight=False, check_stability=True):
        self.tableau = tableau
        self.steps = steps
        self.kind = kind
        self.keep_zero_weight = keep_zero_weight
        self.check_stability = check_stability

    def fit(self, system, y=None):
        sys = check_system(system)
        if self.check_stability:
            sys.assert_stable()
        steps = log_schedule() if self.steps is None else check_steps(self.steps)
        self.tableau_ = load_tableau(self.tableau)
        self.steps_ = steps
        self.factor_ = run_quadrature(sys, GramianKind.parse(self.kind), self.tableau_, steps,
                                      keep_zero_weight=self.keep_zero_weight)
        self.n_features_in_ = sys.n
        return self

    @property
    def z_(self):
        check_is_fitted(self, "factor_")
        return self.factor_.z

    def gramian(self):
        check_is_fitted(self, "factor_")
        return self.factor_.gramian()


class _ProjectionMixin(TransformerMixin):
    """Shared ``predict``/``transform`` for fitted projections."""

    def predict(self, s):
        """Reduced transfer function at the point(s) ``s``."""
        check_is_fitted(self, "result_")
        pts, scalar = check_points(s)
        vals = np.array([transfer_function(self.reduced_, p) for p in pts])
        return vals[0] if scalar else vals

    def transform(self, X):
        """Reduced coordinates ``W^H x`` of the rows of ``X``."""
        check_is_fitted(self, "result_")
        X = np.atleast_2d(np.asarray(X))
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        return X @ self.result_.w.conj()

    def inverse_transform(self, Xr):
        """Lift reduced coordinates back with ``V``."""
        check_is_fitted(self, "result_")
        Xr = np.atleast_2d(np.asarray(Xr))
        return Xr @ self.result_.v.T


class QuadratureBalancer(_ProjectionMixin, BaseEstimator):
    """Approximate balanced reduction from quadrature gramian factors.

    Both gramian factors come from :func:`~rkmor.quadrature.run_quadrature`;
    the projection uses the compact SVD of ``Z_o^H Z_c``. With
    ``truncation="full"`` the reduced transfer function interpolates the
    original at ``expansion_points_``.

    Parameters
    ----------
    tableau_c, tableau_o : str, dict or ButcherTableau
        Tableaus of the controllability and observability runs;
        ``tableau_o=None`` reuses ``tableau_c``.
    steps_c, steps_o : array-like, optional
        Step sizes of the two runs; ``steps_o=None`` reuses ``steps_c``.
    truncation : str or Truncation
        ``"full"``, ``"threshold:<tau>"`` or ``"order:<r>"``.
    realify : bool
        Replace the projection by real bases of the same spans.
    check_stability : bool
        Verify that ``A`` is stable before running.
    """

    def __init__(self, tableau_c="backward_euler", steps_c=None, tableau_o=None, steps_o=None,
                 truncation="full", realify=False, check_stability=True):
        self.tableau_c = tableau_c
        self.steps_c = steps_c
        self.tableau_o = tableau_o
        self.steps_o = steps_o
        self.truncation = truncation
        self.realify = realify
        self.check_stability = check_stability

    def fit(self, system, y=None):
        sys = check_system(system)
        if self.check_stability:
            sys.assert_stable()
        tc = load_tableau(self.tableau_c)
        to = tc if self.tableau_o is None else load_tableau(self.tableau_o)
        sc = log_schedule() if self.steps_c is None else check_steps(self.steps_c)
        so = sc if self.steps_o is None else check_steps(self.steps_o)
        self.factor_c_ = run_quadrature(sys, GramianKind.CONTROLLABILITY, tc, sc)
        self.factor_o_ = run_quadrature(sys, GramianKind.OBSERVABILITY, to, so)
        result = approximate_balance(sys, self.factor_c_, self.factor_o_,
                                     Truncation.parse(self.truncation))
        if self.realify:
            result = realify(result)
        self.system_ = sys
        self.result_ = result
        self.reduced_ = result.reduced
        self.tableaus_ = (tc, to)
        self.steps_ = (sc, so)
        self.expansion_points_ = predict_expansion_points(tc, sc, to, so)
        self.hypothesis_ = self._hypothesis(tc, sc, to, so)
        self.n_features_in_ = sys.n
        return self

    @staticmethod
    def _hypothesis(tc, sc, to, so):
        states = {check_composite_hypothesis(assemble_composite(t, s))
                  for t, s in ((tc, sc), (to, so))}
        for state in ("failed", "unverified"):
            if state in states:
                return state
        if np.any(tc.beta_tilde <= 0) or np.any(to.beta_tilde <= 0):
            return "failed"
        return "verified"

    def verify(self, tol=1e-6):
        """Interpolation report at the predicted expansion points."""
        check_is_fitted(self, "result_")
        return verify_interpolation(self.system_, self.result_, self.expansion_points_, tol,
                                    hypothesis=self.hypothesis_)


class BalancedTruncation(_ProjectionMixin, BaseEstimator):
    """Exact balanced truncation from the dense gramians (small ``n`` only)."""

    def __init__(self, r=1, check_stability=True):
        self.r = r
        self.check_stability = check_stability

    def fit(self, system, y=None):
        sys = check_system(system)
        if self.check_stability:
            sys.assert_stable()
        self.system_ = sys
        self.result_ = exact_balanced_truncation(sys, int(self.r))
        self.reduced_ = self.result_.reduced
        self.hankel_singular_values_ = self.result_.sigma
        self.n_features_in_ = sys.n
        return self
