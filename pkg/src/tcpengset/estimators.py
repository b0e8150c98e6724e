"""scikit-learn style front end to the analytical model.

``fit`` solves the lone-connection stage (flights, ON0, h0) for a path and
file size; ``predict`` maps source counts N to the connection rate h and
``transform`` to the full row of model outputs.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import InvalidParameters
from .model import evaluate, single_connection
from .model.path import path_from_rtt0, path_params

OUTPUT_COLUMNS = ("rho0", "h1", "h2", "h", "ON", "rho", "RTT", "Q", "eta", "L")


class TcpEngsetModel(TransformerMixin, BaseEstimator):
    def __init__(self, C1=100e6, C2=10e6, C3=2e6, RTT0=0.05, D=None, P=1500, a=40, W_R=44, F=12,
                 OFF=1.0, B=None):
        self.C1 = C1
        self.C2 = C2
        self.C3 = C3
        self.RTT0 = RTT0
        self.D = D
        self.P = P
        self.a = a
        self.W_R = W_R
        self.F = F
        self.OFF = OFF
        self.B = B

    def _path(self):
        if self.D is not None:
            return path_params(self.C1, self.C2, self.C3, self.D, self.P, self.a)
        if self.RTT0 is None:
            raise InvalidParameters("set either RTT0 or D")
        return path_from_rtt0(self.C1, self.C2, self.C3, self.RTT0, self.P, self.a)

    def fit(self, X=None, y=None):
        self.path_ = self._path()
        one = single_connection(self.path_, self.W_R, self.F)
        self.flights_ = one.sched.flights
        self.ON0_ = one.ON0
        self.h0_ = one.h0
        self.mn_ = (one.m, one.n)
        self.n_features_in_ = 1
        return self

    def _sources(self, X):
        X = check_array(np.asarray(X).reshape(-1, 1) if np.ndim(X) == 1 else X, dtype=float)
        if X.shape[1] != 1:
            raise ValueError(f"expected one column of source counts, got {X.shape[1]}")
        N = X[:, 0]
        if np.any(N < 1) or np.any(N != np.round(N)):
            raise ValueError("source counts must be positive integers")
        return N.astype(int)

    def _rows(self, X):
        check_is_fitted(self, "path_")
        return [evaluate(self.path_, self.W_R, self.F, self.OFF, N=int(n), B=self.B) for n in self._sources(X)]

    def predict(self, X):
        """Connection rate h (bits/s) for each N."""
        return np.array([r.sol.h for r in self._rows(X)])

    def transform(self, X):
        out = []
        for r in self._rows(X):
            L = np.nan if r.L is None else r.L
            out.append([r.sol.rho0, r.sol.h1, r.sol.h2, r.sol.h, r.sol.ON, r.sol.rho,
                        r.queue.RTT, r.queue.Q, r.queue.eta, L])
        return np.array(out)

    def get_feature_names_out(self, input_features=None):
        return np.array(OUTPUT_COLUMNS, dtype=object)
