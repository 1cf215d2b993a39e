"""scikit-learn compatible wrappers.

The estimators take hyper-parameters in ``__init__`` only, learn nothing
beyond shapes in ``fit`` and do the work in ``transform``, so they drop into
pipelines and ``clone``/``get_params`` work as usual.

* :class:`BoxConvolution` maps signals (rows) to their box measurements.
* :class:`BoxDeconvolver` maps measurements (rows) back to signals by l1
  or sparse-derivative recovery.
* :class:`TVSuperResolver` maps one 2D scan to a reconstructed image.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .boxconv import BoxOperator, Mode
from .exceptions import DimensionError
from .imaging2d import TvConfig, psnr, tv_reconstruct
from .lpsolve import SolverConfig
from .recovery import RecoveryConfig, basis_pursuit, sparse_derivative_recover

__all__ = ["BoxConvolution", "BoxDeconvolver", "TVSuperResolver"]


def _check_features(est, X):
    if X.shape[1] != est.n_features_in_:
        raise DimensionError(
            f"X has {X.shape[1]} features, but {type(est).__name__} was fitted with "
            f"{est.n_features_in_}"
        )


class BoxConvolution(TransformerMixin, BaseEstimator):
    """Apply the width-``k`` box operator to every row of ``X``.

    Parameters
    ----------
    k : int
        Box width.
    mode : {"valid", "circular"}
        Boundary handling, see :class:`boxdecon.boxconv.BoxOperator`.

    Attributes
    ----------
    operator_ : BoxOperator
    n_features_in_ : int
    """

    def __init__(self, k=3, mode="valid"):
        self.k = k
        self.mode = mode

    def fit(self, X, y=None):
        X = check_array(X)
        self.operator_ = BoxOperator(self.k, X.shape[1], Mode(self.mode))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "operator_")
        X = check_array(X)
        _check_features(self, X)
        return np.vstack([self.operator_.apply(row) for row in X])


class BoxDeconvolver(TransformerMixin, BaseEstimator):
    """Recover signals from box measurements, one measurement per row.

    Parameters
    ----------
    k : int
        Box width.
    mode : {"valid", "circular"}
        Operator that produced the measurements.  The signal length is
        ``m + k - 1`` for valid and ``m`` for circular measurements of
        length ``m``.
    objective : {"l1", "tv1d"}
        ``l1`` minimizes ``||x||_1`` (basis pursuit); ``tv1d`` minimizes the
        l1 norm of the forward differences.
    tol_zero, tol_tie : float
        Support snapping and tie-detection tolerances.
    solver : {"auto", "ipm", "simplex"}
        LP method.

    Attributes
    ----------
    operator_ : BoxOperator
    n_features_in_ : int
        Measurement length.
    results_ : list of RecoveryResult
        Per-row results of the most recent :meth:`transform`.
    """

    def __init__(self, k=3, mode="valid", objective="l1", tol_zero=1e-7, tol_tie=1e-7,
                 solver="auto"):
        self.k = k
        self.mode = mode
        self.objective = objective
        self.tol_zero = tol_zero
        self.tol_tie = tol_tie
        self.solver = solver

    def fit(self, Y, y=None):
        Y = check_array(Y)
        m = Y.shape[1]
        mode = Mode(self.mode)
        n = m + self.k - 1 if mode is Mode.VALID else m
        if self.objective not in ("l1", "tv1d"):
            raise ValueError(f"objective must be 'l1' or 'tv1d', got {self.objective!r}")
        self.operator_ = BoxOperator(self.k, n, mode)
        self.n_features_in_ = m
        return self

    def _config(self):
        return RecoveryConfig(
            solver=SolverConfig(method=self.solver),
            tol_zero=self.tol_zero,
            tol_tie=self.tol_tie,
        )

    def recover(self, Y):
        """Full :class:`~boxdecon.recovery.RecoveryResult` for each row of ``Y``."""
        check_is_fitted(self, "operator_")
        Y = check_array(Y)
        _check_features(self, Y)
        solve = basis_pursuit if self.objective == "l1" else sparse_derivative_recover
        cfg = self._config()
        return [solve(self.operator_, row, cfg) for row in Y]

    def transform(self, Y):
        self.results_ = self.recover(Y)
        return np.vstack([r.xhat for r in self.results_])


class TVSuperResolver(TransformerMixin, BaseEstimator):
    """Reconstruct a high-resolution image from its valid ``k x k`` box scan.

    ``X`` is a single 2D measurement of shape ``(h - k + 1, w - k + 1)``;
    the output is ``h x w``.

    Parameters
    ----------
    k : int
        Sensor pixel size in target pixels.
    lam : float
        TV weight.
    max_iters : int
    tol : float

    Attributes
    ----------
    image_ : ndarray
        Reconstruction of the image passed to :meth:`fit`.
    log_ : list of dict
        Convergence log of that reconstruction.
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, k=4, lam=1e-2, max_iters=5000, tol=1e-7):
        self.k = k
        self.lam = lam
        self.max_iters = max_iters
        self.tol = tol

    def _run(self, X):
        X = check_array(X, ensure_min_samples=1, ensure_min_features=1)
        h, w = X.shape[0] + self.k - 1, X.shape[1] + self.k - 1
        cfg = TvConfig(lam=self.lam, max_iters=self.max_iters, tol=self.tol)
        return tv_reconstruct(X, self.k, h, w, cfg)

    def fit(self, X, y=None):
        res = self._run(X)
        self.image_ = res.image
        self.log_ = res.log
        self.n_iter_ = res.iterations
        self.converged_ = res.converged
        self.n_features_in_ = np.asarray(X).shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "image_")
        return self._run(X).image

    def fit_transform(self, X, y=None):
        return self.fit(X).image_

    def score(self, X, y):
        """PSNR (dB, peak 1) of the reconstruction of ``X`` against the true image ``y``."""
        return psnr(self.transform(X), y, peak=1.0)
