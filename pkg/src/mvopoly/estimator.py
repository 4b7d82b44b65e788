"""scikit-learn transformer exposing orthogonal polynomial features."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import SpecError
from .functional import Diagonal, DiscreteMeasure, FunctionalSpec
from .mvopr import OpFamily


class OrthogonalPolynomialFeatures(TransformerMixin, BaseEstimator):
    """Evaluate the monic orthogonal family ``P_1`` up to total degree ``n_max``.

    With ``functional=None`` the family is orthogonal with respect to the
    empirical measure of the training samples (optionally weighted).  Given a
    functional, ``fit`` only records the input dimension.
    """

    def __init__(self, n_max=2, functional=None, mode="auto"):
        self.n_max = n_max
        self.functional = functional
        self.mode = mode

    def fit(self, X, y=None, sample_weight=None):
        X = check_array(X, dtype=float)
        if not isinstance(self.n_max, (int, np.integer)) or self.n_max < 0:
            raise SpecError("n_max must be a non-negative integer")
        self.n_features_in_ = X.shape[1]
        if self.functional is None:
            w = np.ones(len(X)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
            if w.shape != (len(X),) or np.any(w < 0) or w.sum() <= 0:
                raise SpecError("sample_weight must be non-negative with a positive sum")
            u = FunctionalSpec([DiscreteMeasure(points=X, weights=w / w.sum())])
        else:
            u = self.functional
            if u.D != X.shape[1]:
                raise SpecError(f"functional dimension {u.D} != {X.shape[1]} features")
        self.family_ = OpFamily.from_generator(Diagonal(u), int(self.n_max), mode=self.mode)
        self.h_blocks_ = self.family_.h_blocks
        return self

    def transform(self, X):
        check_is_fitted(self, "family_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return np.real_if_close(self.family_.eval_all(1, X))

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "family_")
        return np.array(["P" + "_".join(str(v) for v in a) for a in self.family_.idx.multi_indices], dtype=object)
