"""Correction filter design and SI coefficient extraction.

After the front end, the samples ``y[m Ts]`` of the low-passed (and possibly
mixed) signal satisfy ``Y(w) = A(e^{jwT}) R(w)`` inside the band, where
``R(w) = sum_l c_l H(w + 2 pi l / T)`` for a mixer
``p(t) = sum_l c_l exp(-j 2 pi l t / T)``.  Coefficients are recovered by
taking one DFT of the samples, dividing the band bins by ``R`` and folding
them onto the DFT grid of the coefficient sequence.

All transforms treat the sample window as one period, so the recovery is the
exact inverse of the periodic acquisition chain.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .analog_chain import MixerSpec
from .signal_model import Generator

__all__ = [
    "SingularFilterError",
    "SpectrumGrid",
    "CorrectionFilter",
    "dft_spectrum",
    "band_bins",
    "mixer_to_R",
    "build_correction",
    "extract_coefficients",
    "error_propagation",
]

_BIN_RTOL = 1e-9


class SingularFilterError(ArithmeticError):
    """The effective spectrum vanishes somewhere in the correction band."""

    def __init__(self, message: str, zeros: list[float]):
        super().__init__(message)
        self.zeros = zeros


@dataclass(frozen=True, eq=False)
class SpectrumGrid:
    omega: np.ndarray
    values: np.ndarray
    T: float

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float).reshape(-1)
        values = np.array(self.values, dtype=complex).reshape(-1)
        if omega.shape != values.shape:
            raise ValueError("omega and values must have the same length")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "values", values)

    def to_csv(self, path) -> None:
        _write_complex_csv(path, self.omega, self.values)


@dataclass(frozen=True, eq=False)
class CorrectionFilter:
    """Response ``1/R`` on the band bins (regularised when ``eps > 0``)."""

    omega: np.ndarray
    response: np.ndarray
    R: np.ndarray
    T: float
    cutoff: float
    eps: float = 0.0
    zero_report: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        _write_complex_csv(path, self.omega, self.response)


def _write_complex_csv(path, omega, values):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["omega", "re", "im"])
        for o, v in zip(omega, values):
            w.writerow([f"{o:.12g}", f"{v.real:.12g}", f"{v.imag:.12g}"])


def dft_spectrum(samples, Ts: float, T: float) -> SpectrumGrid:
    """DFT of a sample window, bins at ``omega_k = 2 pi k / (N Ts)`` (numpy order)."""
    samples = np.asarray(samples)
    omega = 2.0 * np.pi * np.fft.fftfreq(samples.size, d=Ts)
    return SpectrumGrid(omega, np.fft.fft(samples), T)


def _oversampling(T: float, Ts: float) -> int:
    ratio = T / Ts
    of = int(round(ratio))
    if of < 1 or abs(ratio - of) > 1e-9 * ratio:
        raise ValueError(f"T/Ts = {ratio} must be a positive integer")
    return of


def band_bins(n_samples: int, Ts: float, T: float, cutoff: float | None = None) -> np.ndarray:
    """Ascending DFT bin frequencies with ``|omega| <= cutoff`` (default ``pi/T``)."""
    cutoff = np.pi / T if cutoff is None else cutoff
    omega = np.sort(2.0 * np.pi * np.fft.fftfreq(n_samples, d=Ts))
    return omega[np.abs(omega) <= cutoff * (1.0 + _BIN_RTOL)]


def mixer_to_R(g: Generator, m: MixerSpec | None, omega, T: float) -> SpectrumGrid:
    """Effective in-band spectrum ``R(w) = sum_l c_l H(w + 2 pi l / T)``.

    With ``m=None`` (no mixer) this is just ``H``.
    """
    omega = np.asarray(omega, dtype=float)
    if m is None:
        return SpectrumGrid(omega, g.spectrum(omega), T)
    if not np.isclose(m.T, T, rtol=1e-12):
        raise ValueError(f"mixer period {m.T} does not match the shift period {T}")
    R = np.zeros(omega.shape, dtype=complex)
    for l, c in m.coeffs.items():
        if c != 0:
            R += c * g.spectrum(omega + 2.0 * np.pi * l / T)
    return SpectrumGrid(omega, R, T)


def build_correction(R: SpectrumGrid, eps: float = 0.0, zero_tol_rel: float = 1e-12,
                     cutoff: float | None = None) -> CorrectionFilter:
    """Correction response ``1/R``; with ``eps > 0`` use ``conj(R)/max(|R|^2, eps^2)``.

    Raises :class:`SingularFilterError` when ``eps == 0`` and some bin has
    ``|R| <= zero_tol_rel * max|R|``.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    cutoff = float(np.max(np.abs(R.omega))) if cutoff is None else cutoff
    mag = np.abs(R.values)
    tol = zero_tol_rel * (mag.max() if mag.size else 0.0)
    zero_report = [float(w) for w in R.omega[mag <= tol]]
    if eps == 0.0:
        if zero_report:
            where = ", ".join(f"{w / np.pi:+.4f}*pi" for w in zero_report)
            raise SingularFilterError(
                f"effective spectrum R vanishes at {len(zero_report)} band bin(s): omega = {where}",
                zero_report,
            )
        response = 1.0 / R.values
    else:
        response = np.conj(R.values) / np.maximum(mag**2, eps**2)
    return CorrectionFilter(R.omega, response, R.values, R.T, cutoff, eps, zero_report)


def _coefficient_spectrum(spec: SpectrumGrid, filt: CorrectionFilter, Ts: float,
                          combine: str) -> np.ndarray:
    """Fold corrected band bins of a sample spectrum onto the coefficient DFT grid."""
    T = filt.T
    of = _oversampling(T, Ts)
    n = spec.values.size
    if n % of:
        raise ValueError(f"sample count {n} is not a multiple of the oversampling factor {of}")
    n_coef = n // of
    k = np.rint(spec.omega * n * Ts / (2.0 * np.pi)).astype(np.int64)
    in_band = np.abs(spec.omega) <= filt.cutoff * (1.0 + _BIN_RTOL)
    order = np.argsort(spec.omega[in_band], kind="stable")
    band_k = k[in_band][order]
    band_w = spec.omega[in_band][order]
    if band_w.shape != filt.omega.shape or not np.allclose(band_w, filt.omega, rtol=_BIN_RTOL, atol=1e-12):
        raise ValueError("correction filter bins do not match the sample window")
    Y = spec.values[in_band][order]
    idx = band_k % n_coef

    if combine == "central":
        keep = np.abs(band_w) <= np.pi / T * (1.0 + _BIN_RTOL)
        Y, idx, resp, Rv = Y[keep], idx[keep], filt.response[keep], filt.R[keep]
    else:
        resp, Rv = filt.response, filt.R

    num = np.zeros(n_coef, dtype=complex)
    den = np.zeros(n_coef)
    if combine in ("average", "central"):
        np.add.at(num, idx, Ts * Y * resp)
        np.add.at(den, idx, 1.0)
    elif combine == "lsq":
        np.add.at(num, idx, Ts * Y * np.conj(Rv))
        np.add.at(den, idx, np.abs(Rv) ** 2)
    else:
        raise ValueError(f"unknown band combination {combine!r}")
    if np.any(den == 0):
        raise SingularFilterError("some coefficient frequencies receive no usable band bin", [])
    return num / den


def extract_coefficients(samples, filt: CorrectionFilter, Ts: float,
                         combine: str = "average") -> np.ndarray:
    """Recover ``a[n]`` on the window spanned by ``samples``.

    ``samples`` start at the window origin and hold ``OF * M`` values, where
    ``OF = T/Ts``; the result has ``M`` coefficients, coefficient ``j`` sitting
    at time ``origin + j*T``.  When the band covers several replicas of the
    coefficient spectrum (``cutoff > pi/T``), they are combined by uniform
    averaging (``"average"``), least squares (``"lsq"``) or only the central
    band is used (``"central"``).
    """
    spec = dft_spectrum(samples, Ts, filt.T)
    A = _coefficient_spectrum(spec, filt, Ts, combine)
    a = np.fft.ifft(A)
    scale = max(np.max(np.abs(a.real)), np.finfo(float).tiny)
    if np.max(np.abs(a.imag)) > 1e-6 * scale:
        raise ValueError("recovered coefficients are not real; is the filter conjugate symmetric?")
    return a.real


def error_propagation(E_BL: SpectrumGrid, R, Ts: float, combine: str = "average") -> float:
    """Predicted ``||a_hat - a||^2`` from the spectrum of the BL recovery error.

    ``R`` is either a :class:`CorrectionFilter` or the raw effective spectrum
    on the band bins; in the latter case a zero in ``R`` gives ``inf``.
    """
    if isinstance(R, SpectrumGrid):
        if np.any(R.values == 0):
            return float("inf")
        R = CorrectionFilter(R.omega, 1.0 / R.values, R.values, R.T,
                             float(np.max(np.abs(R.omega))))
    if not np.any(E_BL.values):
        return 0.0
    A = _coefficient_spectrum(E_BL, R, Ts, combine)
    return float(np.sum(np.abs(A) ** 2) / A.size)
