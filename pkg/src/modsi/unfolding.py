"""Unfolding of modulo samples back to the underlying bandlimited samples.

All backends work on integer fold counts: the recovered sequence is always
``folded + 2*lam*counts`` with integer ``counts``, so re-folding the output
returns the input exactly.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np
from scipy.special import comb

from .analog_chain import FoldedSamples, fold

__all__ = [
    "LatticeRoundingError",
    "UnfoldReport",
    "Unfolder",
    "ItohUnfolder",
    "HODUnfolder",
    "unfold_itoh",
    "unfold_hod",
    "unfold_predictive",
    "PredictiveUnfolder",
    "make_unfolder",
]


class LatticeRoundingError(RuntimeError):
    """A fold offset could not be snapped to the ``2*lam`` lattice within tolerance."""


@dataclass(frozen=True, eq=False)
class UnfoldReport:
    samples: np.ndarray
    counts: np.ndarray
    lam: float
    method: str
    slack: float = 0.0

    @property
    def residual(self) -> np.ndarray:
        """Fold offsets ``samples - folded``, each a multiple of ``2*lam``."""
        return 2.0 * self.lam * self.counts


def _integer_jumps(values: np.ndarray, lam: float) -> np.ndarray:
    """Lattice index of ``fold(v) - v``; exact up to rounding of the division."""
    wrapped = fold(values, lam)
    return np.rint((wrapped - values) / (2.0 * lam)).astype(np.int64)


def unfold_itoh(folded: FoldedSamples, anchor: float | None = None) -> UnfoldReport:
    """First-difference unwrapping.

    Correct whenever consecutive true samples differ by less than ``lam`` and
    the first sample is known; violating that silently corrupts the output.
    ``anchor`` is the true value of sample 0 (default: the folded value,
    i.e. the first sample is assumed in range).
    """
    m = folded.values
    lam = folded.lam
    counts = np.zeros(m.size, dtype=np.int64)
    if m.size > 1:
        counts[1:] = np.cumsum(_integer_jumps(np.diff(m), lam))
    if anchor is not None and m.size:
        counts += int(round((anchor - m[0]) / (2.0 * lam)))
    return UnfoldReport(m + 2.0 * lam * counts, counts, lam, "itoh")


def _binomial_basis(n: int, order: int) -> np.ndarray:
    k = np.arange(n, dtype=float)
    return np.column_stack([comb(k, j) for j in range(order)])


def unfold_hod(folded: FoldedSamples, order: int = 3, beta: float | None = None,
               slack: float = 0.25, strict: bool = True) -> UnfoldReport:
    """Unfold via higher-order differences.

    The ``order``-th difference of the true samples is read off as
    ``fold(diff(folded, order))``, valid while those differences stay below
    ``lam``.  The implied lattice offsets are summed back ``order`` times.
    Each summation leaves an unknown lattice-valued constant, so the offsets
    are known up to a polynomial ``sum_j u_j * C(k, j)`` with integer ``u_j``.
    Terms ``j >= 1`` are fixed by a least-squares fit against the bounded
    samples, rounded to integers from the highest degree down.  The constant
    term is chosen so the output respects ``|y| <= beta``; among admissible
    offsets the one that keeps sample 0 unfolded wins.

    ``slack`` is the largest allowed distance (in lattice units) between a
    fitted coefficient and its rounded value.  With ``strict`` a larger
    distance raises :class:`LatticeRoundingError`; otherwise the worst
    distance is only recorded in ``report.slack``.
    """
    order = int(order)
    if order < 1:
        raise ValueError(f"difference order must be >= 1, got {order}")
    m = folded.values
    lam = folded.lam
    n = m.size
    if n <= order:
        raise ValueError(f"need more than {order} samples for order-{order} unfolding")

    jumps = _integer_jumps(np.diff(m, n=order), lam)
    counts = jumps
    for _ in range(order):
        counts = np.concatenate(([0], np.cumsum(counts)))

    worst = 0.0
    candidate = m + 2.0 * lam * counts
    if order > 1:
        basis = _binomial_basis(n, order)
        fixed = np.zeros(order, dtype=np.int64)
        resid = candidate.copy()
        for j in range(order - 1, 0, -1):
            cols = basis[:, : j + 1]
            norms = np.linalg.norm(cols, axis=0)
            sol, *_ = np.linalg.lstsq(cols / norms, -resid / (2.0 * lam), rcond=None)
            u = sol[j] / norms[j]
            fixed[j] = int(round(u))
            worst = max(worst, abs(u - fixed[j]))
            resid = resid + 2.0 * lam * fixed[j] * basis[:, j]
        counts = counts + (basis[:, 1:] @ fixed[1:]).round().astype(np.int64)
        candidate = m + 2.0 * lam * counts

    if strict and worst > slack:
        raise LatticeRoundingError(
            f"integration constant is {worst:.3f} lattice steps from the nearest lattice point "
            f"(tolerance {slack}); increase oversampling or reduce noise"
        )

    if beta is not None:
        counts = counts + _bounded_shift(candidate, lam, beta)
    return UnfoldReport(m + 2.0 * lam * counts, counts, lam, "hod", slack=worst)


def _bounded_shift(candidate: np.ndarray, lam: float, beta: float) -> int:
    """Global lattice shift keeping ``|candidate + shift*2lam| <= beta``, preferring 0."""
    lo = math.ceil((-beta - candidate.min()) / (2.0 * lam) - 1e-9)
    hi = math.floor((beta - candidate.max()) / (2.0 * lam) + 1e-9)
    if lo <= hi:
        return 0 if lo <= 0 <= hi else (lo if abs(lo) < abs(hi) else hi)
    centre = -(candidate.max() + candidate.min()) / 2.0
    return int(round(centre / (2.0 * lam)))


@functools.lru_cache(maxsize=32)
def _band_predictors(band: float, order: int, ridge: float) -> tuple[np.ndarray, ...]:
    """One-step Wiener predictors of orders 1..order for a flat spectrum on ``|theta| < band``.

    ``ridge`` is the white-noise to signal power ratio; entry ``p`` of the
    result holds ``p`` taps applied to ``y[n-1], ..., y[n-p]``.
    """
    lags = np.arange(order + 1)
    acf = np.sinc(band * lags / np.pi)
    out = [np.zeros(0)]
    for p in range(1, order + 1):
        toeplitz = acf[np.abs(np.subtract.outer(np.arange(p), np.arange(p)))]
        taps = np.linalg.solve(toeplitz + ridge * np.eye(p), acf[1 : p + 1])
        taps.setflags(write=False)
        out.append(taps)
    return tuple(out)


def unfold_predictive(folded: FoldedSamples, oversampling: float, order: int = 16,
                      noise_std: float = 0.0, beta: float | None = None) -> UnfoldReport:
    """Sequential unwrapping against a linear prediction from past samples.

    Each sample is placed on the lattice branch closest to a one-step Wiener
    prediction designed for a signal occupying ``|theta| < pi/oversampling``
    plus white noise of ``noise_std``.  Long predictors average the noise that
    finite differences amplify, so this backend tolerates far lower SNR than
    :func:`unfold_hod`.  A wrong decision shifts the remainder of the output by
    one lattice step instead of growing polynomially.  The signal power used
    in the design is ``beta**2 / 4`` (``beta`` defaults to ``4*lam``).
    """
    if oversampling <= 1:
        raise ValueError("oversampling must exceed 1")
    order = int(order)
    if order < 1:
        raise ValueError("predictor order must be >= 1")
    m = folded.values
    lam = folded.lam
    power = ((4.0 * lam) if beta is None else beta) ** 2 / 4.0
    ridge = max(noise_std**2 / power, 1e-9)
    preds = _band_predictors(float(np.pi / oversampling), order, float(round(ridge, 15)))
    two_lam = 2.0 * lam
    y = np.empty(m.size)
    counts = np.zeros(m.size, dtype=np.int64)
    for n in range(m.size):
        p = min(n, order)
        guess = float(preds[p] @ y[n - 1 :: -1][:p]) if p else m[0]
        q = math.floor((guess - m[n]) / two_lam + 0.5)
        counts[n] = q
        y[n] = m[n] + two_lam * q
    if beta is not None:
        counts = counts + _bounded_shift(y, lam, beta)
    return UnfoldReport(m + two_lam * counts, counts, lam, "predictive")


class Unfolder(Protocol):
    def unfold(self, folded: FoldedSamples) -> UnfoldReport: ...


@dataclass(frozen=True)
class ItohUnfolder:
    anchor: float | None = None

    def unfold(self, folded: FoldedSamples) -> UnfoldReport:
        return unfold_itoh(folded, self.anchor)


@dataclass(frozen=True)
class HODUnfolder:
    order: int = 3
    beta: float | None = None
    slack: float = 0.25
    strict: bool = True

    def unfold(self, folded: FoldedSamples) -> UnfoldReport:
        return unfold_hod(folded, self.order, self.beta, self.slack, self.strict)


@dataclass(frozen=True)
class PredictiveUnfolder:
    oversampling: float
    order: int = 16
    noise_std: float = 0.0
    beta: float | None = None

    def unfold(self, folded: FoldedSamples) -> UnfoldReport:
        return unfold_predictive(folded, self.oversampling, self.order, self.noise_std, self.beta)


def make_unfolder(spec: dict | None, **overrides) -> Unfolder:
    """Build an unfolder from a config mapping.

    ``{"unfolder": "hod", "order": 3}``, ``{"unfolder": "itoh"}`` or
    ``{"unfolder": "predictive", "order": 16}``.  ``overrides`` supply
    run-time context (``beta``, ``oversampling``, ``noise_std``, ``strict``);
    keys a backend does not use are dropped.
    """
    spec = dict(spec or {"unfolder": "hod"})
    kind = spec.pop("unfolder", "hod")
    spec.update(overrides)
    if kind == "itoh":
        for key in ("beta", "strict", "slack", "oversampling", "noise_std"):
            spec.pop(key, None)
        return ItohUnfolder(**spec)
    if kind == "hod":
        spec.pop("oversampling", None)
        spec.pop("noise_std", None)
        return HODUnfolder(**spec)
    if kind == "predictive":
        spec.pop("strict", None)
        spec.pop("slack", None)
        return PredictiveUnfolder(**spec)
    raise ValueError(f"unknown unfolder {kind!r}; expected 'hod', 'itoh' or 'predictive'")
