"""Scikit-learn style front end for vector-to-vector regression."""
import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from . import kernels as K
from .presets import Preset, build_kernel, check_vectors, parse_preset
from .solver import assemble_gram, fit, predict


def _adapter_for(spec):
    if isinstance(spec, (K.ConvScalarKernel, K.ConvCirculantKernel, K.ConvGridKernel, K.ConvGeneralKernel)):
        return Preset("custom", None, "image", "circulant")
    if isinstance(spec, K.CnnNestedKernel):
        return Preset("custom", None, "circulant", "circulant")
    if isinstance(spec, (K.SeparableKernel, K.NonSeparableKernel)):
        return Preset("custom", None, "vector", "column")
    return Preset("custom", None, "dense", "circulant")


class RKHMRegressor(RegressorMixin, BaseEstimator):
    """Kernel ridge regression with an algebra-valued kernel.

    Rows of ``X`` and ``Y`` are real vectors of the same length ``p``.
    Inputs and targets are embedded in the kernel's algebra, the system
    ``(G + lam I) c = y`` is solved, and predictions are decoded back to
    vectors.

    Parameters
    ----------
    kernel : str or Kernel
        Preset name (``"qr-poly"``, ``"vv-gaussian-T"``, ..., optionally
        ``"name:key=value"``) or a kernel instance.
    c : float, optional
        Kernel parameter passed to the preset; defaults to the preset's own.
    lam : float
        Regularization weight.
    solver : {"auto", "dense", "circulant", "cg"}
    tol, max_iter :
        Conjugate-gradient stopping rule.
    """

    def __init__(self, kernel="qr-poly", c=None, lam=0.1, solver="auto", tol=1e-10, max_iter=1000):
        self.kernel = kernel
        self.c = c
        self.lam = lam
        self.solver = solver
        self.tol = tol
        self.max_iter = max_iter

    def _resolve(self, p):
        if isinstance(self.kernel, str):
            preset, params = parse_preset(self.kernel)
            if self.c is not None:
                params["c"] = self.c
            return build_kernel(preset, p, **params), preset
        return self.kernel, _adapter_for(self.kernel)

    def fit(self, X, Y):
        X = check_vectors(X, "X")
        Y = check_vectors(Y, "Y")
        if X.shape != Y.shape:
            raise ValueError(f"X and Y must have the same shape, got {X.shape} and {Y.shape}")
        spec, adapter = self._resolve(X.shape[1])
        inputs = [adapter.embed_input(x) for x in X]
        targets = [adapter.embed_target(y) for y in Y]
        self.gram_ = assemble_gram(spec, inputs)
        self.model_ = fit(spec, inputs, targets, self.lam, self.solver, self.tol, self.max_iter, gram=self.gram_)
        self.spec_ = spec
        self.adapter_ = adapter
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_vectors(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return np.array([self.adapter_.decode(self.predict_algebra(x)) for x in X])

    def predict_algebra(self, x):
        """Undecoded prediction ``sum_j k(x, x_j) c_j`` for one input vector."""
        check_is_fitted(self, "model_")
        return predict(self.model_, self.adapter_.embed_input(x))
