"""scikit-learn style front ends for acquisition and recovery.

Rows of ``X`` are independent signals.  ``ModuloAcquisition`` maps
coefficient rows to folded sample rows; ``Unfold``, ``BandProjector`` and
``CoefficientRecovery`` undo it and chain in a :class:`~sklearn.pipeline.Pipeline`
(see :func:`make_recovery_pipeline`).  All window bookkeeping follows the
harness: each row spans ``pad + n_coeffs + pad_right`` shifts treated as one
period, ``oversampling`` samples per shift.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.pipeline import Pipeline
from sklearn.utils.validation import check_array, check_is_fitted

from .analog_chain import FoldedSamples, fold, lowpass, mix, normalize_peak, sample
from .signal_model import FineSignal, SISpec, default_grid, synthesize
from .spectral import band_bins, build_correction, extract_coefficients, mixer_to_R
from .unfolding import make_unfolder

__all__ = [
    "ModuloAcquisition",
    "Unfold",
    "BandProjector",
    "CoefficientRecovery",
    "make_recovery_pipeline",
]


def _check_oversampling(of):
    if int(of) != of or of < 2:
        raise ValueError(f"oversampling must be an integer >= 2, got {of}")
    return int(of)


class ModuloAcquisition(TransformerMixin, BaseEstimator):
    """Coefficients -> folded samples through the simulated front end.

    ``transform`` returns the folded samples; ``scale_`` after the last
    call holds the per-row normalization factors when ``normalize``.
    """

    def __init__(self, generator=None, T=1.0, oversampling=5, lam=0.2, mixer=None,
                 pad=20, pad_right=None, q=16, normalize=True):
        self.generator = generator
        self.T = T
        self.oversampling = oversampling
        self.lam = lam
        self.mixer = mixer
        self.pad = pad
        self.pad_right = pad_right
        self.q = q
        self.normalize = normalize

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if self.generator is None:
            raise ValueError("a generator is required")
        _check_oversampling(self.oversampling)
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        self.n_features_in_ = X.shape[1]
        return self

    def acquire(self, a) -> dict:
        """Run one coefficient vector through the chain, keeping every stage."""
        spec = SISpec(self.T, np.asarray(a, dtype=float), self.generator)
        right = self.pad if self.pad_right is None else self.pad_right
        grid = default_grid(spec, self.oversampling, self.q, self.pad, right)
        x = synthesize(spec, grid, periodic=True)
        mixed = mix(x, self.mixer) if self.mixer is not None else x
        y = lowpass(mixed, np.pi / self.T)
        scale = 1.0
        if self.normalize:
            y, scale = normalize_peak(y)
        samples = sample(y, self.T / self.oversampling)
        return {"x": x, "mixed": mixed, "y": y, "scale": scale, "samples": samples,
                "folded": fold(samples, self.lam)}

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} coefficients per row, got {X.shape[1]}")
        out, scales = [], []
        for row in X:
            stages = self.acquire(row)
            out.append(stages["folded"])
            scales.append(stages["scale"])
        self.scale_ = np.array(scales)
        return np.vstack(out)


class Unfold(TransformerMixin, BaseEstimator):
    """Folded sample rows -> unfolded rows with a configurable backend."""

    def __init__(self, lam=0.2, method="hod", order=3, beta=None, oversampling=5,
                 noise_std=0.0, strict=True):
        self.lam = lam
        self.method = method
        self.order = order
        self.beta = beta
        self.oversampling = oversampling
        self.noise_std = noise_std
        self.strict = strict

    def _unfolder(self):
        spec = {"unfolder": self.method}
        if self.method in ("hod", "predictive"):
            spec["order"] = self.order
        return make_unfolder(spec, beta=self.beta, oversampling=self.oversampling,
                             noise_std=self.noise_std, strict=self.strict)

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        self.unfolder_ = self._unfolder()
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "unfolder_")
        X = check_array(X, dtype=float)
        # Ts only labels the samples here; unfolding is rate free
        rows = [self.unfolder_.unfold(FoldedSamples(self.lam, 1.0, fold(r, self.lam))).samples for r in X]
        return np.vstack(rows)


class BandProjector(TransformerMixin, BaseEstimator):
    """Ideal low-pass of each row to ``|omega| <= pi/T`` (rows at ``T/oversampling``)."""

    def __init__(self, T=1.0, oversampling=5):
        self.T = T
        self.oversampling = oversampling

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        _check_oversampling(self.oversampling)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=float)
        Ts = self.T / self.oversampling
        return np.vstack([lowpass(FineSignal(0.0, Ts, r), np.pi / self.T).values for r in X])


class CoefficientRecovery(TransformerMixin, BaseEstimator):
    """Unfolded sample rows -> SI coefficients via the correction filter ``1/R``.

    ``fit`` designs the filter for the row length seen; ``transform``
    returns one coefficient per shift of the window.
    """

    def __init__(self, generator=None, T=1.0, oversampling=5, mixer=None, epsilon=0.0,
                 cutoff=None, combine="average"):
        self.generator = generator
        self.T = T
        self.oversampling = oversampling
        self.mixer = mixer
        self.epsilon = epsilon
        self.cutoff = cutoff
        self.combine = combine

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if self.generator is None:
            raise ValueError("a generator is required")
        of = _check_oversampling(self.oversampling)
        if X.shape[1] % of:
            raise ValueError(f"row length {X.shape[1]} is not a multiple of oversampling {of}")
        Ts = self.T / of
        omega = band_bins(X.shape[1], Ts, self.T, self.cutoff)
        R = mixer_to_R(self.generator, self.mixer, omega, self.T)
        self.filter_ = build_correction(R, eps=self.epsilon, cutoff=self.cutoff)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "filter_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected rows of {self.n_features_in_} samples, got {X.shape[1]}")
        Ts = self.T / self.oversampling
        return np.vstack([extract_coefficients(r, self.filter_, Ts, self.combine) for r in X])


def make_recovery_pipeline(generator, T=1.0, oversampling=5, lam=0.2, mixer=None,
                           method="hod", order=3, beta=None, project=True, epsilon=0.0) -> Pipeline:
    """unfold -> [band projection] -> correction filter, as one pipeline."""
    steps = [("unfold", Unfold(lam=lam, method=method, order=order, beta=beta, oversampling=oversampling))]
    if project:
        steps.append(("project", BandProjector(T=T, oversampling=oversampling)))
    steps.append(("correct", CoefficientRecovery(generator=generator, T=T, oversampling=oversampling,
                                                 mixer=mixer, epsilon=epsilon)))
    return Pipeline(steps)
