"""Analog front end: mixer, ideal low-pass filter, modulo fold, sampler, noise."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .signal_model import FineSignal

__all__ = [
    "MixerSpec",
    "FoldedSamples",
    "mix",
    "lowpass",
    "fold",
    "sample",
    "normalize_peak",
    "noise_std",
    "add_noise",
]


@dataclass(frozen=True, eq=False)
class MixerSpec:
    """Real ``T``-periodic mixer ``p(t) = sum_l c_l exp(-j 2 pi l t / T)``.

    Only real mixers are supported, so ``c_{-l}`` must equal ``conj(c_l)``.
    """

    T: float
    coeffs: Mapping[int, complex]

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"mixer period must be positive, got {self.T}")
        coeffs = {int(l): complex(c) for l, c in dict(self.coeffs).items()}
        if not coeffs or all(c == 0 for c in coeffs.values()):
            raise ValueError("mixer needs at least one non-zero Fourier coefficient")
        for l, c in coeffs.items():
            partner = coeffs.get(-l, 0.0)
            if abs(partner - np.conj(c)) > 1e-12 * max(1.0, abs(c)):
                raise ValueError(f"mixer is not real: c_{-l} != conj(c_{l})")
        object.__setattr__(self, "coeffs", dict(sorted(coeffs.items())))

    @classmethod
    def identity(cls, T: float) -> "MixerSpec":
        return cls(T, {0: 1.0})

    @classmethod
    def from_cosines(cls, T: float, dc: float = 0.0, cos=(), sin=()) -> "MixerSpec":
        """Build from ``dc + sum amp*cos(2 pi k t/T) + sum amp*sin(2 pi k t/T)``.

        ``cos`` and ``sin`` are sequences of ``(harmonic, amp)`` pairs.
        """
        coeffs: dict[int, complex] = {0: complex(dc)}
        for k, amp in cos:
            k = int(k)
            if k == 0:
                coeffs[0] += amp
                continue
            coeffs[k] = coeffs.get(k, 0) + amp / 2.0
            coeffs[-k] = coeffs.get(-k, 0) + amp / 2.0
        for k, amp in sin:
            k = int(k)
            if k == 0:
                continue
            # sin(v) = (e^{jv} - e^{-jv}) / 2j, and c_l multiplies e^{-j 2 pi l t/T}
            coeffs[k] = coeffs.get(k, 0) + 1j * amp / 2.0
            coeffs[-k] = coeffs.get(-k, 0) - 1j * amp / 2.0
        return cls(T, coeffs)

    @property
    def order(self) -> int:
        return max(abs(l) for l in self.coeffs)

    def is_identity(self) -> bool:
        return all((c == 1.0 if l == 0 else c == 0.0) for l, c in self.coeffs.items())

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        p = np.zeros(t.shape, dtype=complex)
        for l, c in self.coeffs.items():
            p += c * np.exp(-2j * np.pi * l * t / self.T)
        return p


@dataclass(frozen=True, eq=False)
class FoldedSamples:
    """Modulo samples with threshold ``lam`` taken every ``Ts`` seconds."""

    lam: float
    Ts: float
    values: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"folding threshold must be positive, got {self.lam}")
        if not self.Ts > 0:
            raise ValueError(f"sample period must be positive, got {self.Ts}")
        values = np.array(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise ValueError("folded samples must be finite")
        if values.size and (values.min() < -self.lam or values.max() >= self.lam):
            raise ValueError("folded samples must lie in [-lam, lam)")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size


def mix(x: FineSignal, m: MixerSpec) -> FineSignal:
    """Multiply ``x`` pointwise by the mixer waveform."""
    p = m(x.t)
    peak = np.max(np.abs(p.real)) if p.size else 0.0
    if np.max(np.abs(p.imag), initial=0.0) > 1e-9 * max(peak, 1.0):
        raise ValueError("mixer waveform has a non-negligible imaginary part")
    return x.with_values(x.values * p.real)


def lowpass(x: FineSignal, cutoff: float, pad_factor: int = 1) -> FineSignal:
    """Ideal brick-wall low-pass on the DFT grid.

    Bins with ``|omega| > cutoff`` are zeroed; the band edge itself is kept.
    With ``pad_factor == 1`` the window is treated as one period, which makes
    the filter an exact projection.  ``pad_factor > 1`` zero-pads before
    filtering and truncates afterwards (non-periodic inputs).
    """
    nyquist = np.pi / x.dt
    if not 0 < cutoff < nyquist:
        raise ValueError(f"cutoff {cutoff} must lie in (0, {nyquist}) for grid step {x.dt}")
    if pad_factor < 1:
        raise ValueError("pad_factor must be >= 1")
    n = len(x)
    n_fft = n * int(pad_factor)
    spec = np.fft.rfft(x.values, n=n_fft)
    omega = 2.0 * np.pi * np.fft.rfftfreq(n_fft, d=x.dt)
    spec[omega > cutoff * (1.0 + 1e-12)] = 0.0
    y = np.fft.irfft(spec, n=n_fft)[:n]
    return x.with_values(y)


def fold(x, lam: float):
    """Modulo operator ``((x + lam) mod 2 lam) - lam`` with floor-mod semantics.

    Values already in ``[-lam, lam)`` are returned bit-for-bit, which makes
    the operator exactly idempotent.  Accepts arrays, scalars or FineSignal.
    """
    if not lam > 0:
        raise ValueError(f"folding threshold must be positive, got {lam}")
    if isinstance(x, FineSignal):
        return x.with_values(fold(x.values, lam))
    arr = np.asarray(x, dtype=float)
    out = np.array(arr, dtype=float, copy=True)
    out_of_range = (arr < -lam) | (arr >= lam)
    if np.any(out_of_range):
        v = arr[out_of_range]
        r = v - 2.0 * lam * np.floor((v + lam) / (2.0 * lam))
        # floating point can land a hair outside the half-open interval
        r = np.where(r >= lam, r - 2.0 * lam, r)
        r = np.where(r < -lam, r + 2.0 * lam, r)
        out[out_of_range] = r
    if np.ndim(x) == 0:
        return float(out)
    return out


def sample(x: FineSignal, Ts: float) -> np.ndarray:
    """Values at ``t0 + k*Ts``; ``Ts`` must be a whole multiple of the grid step."""
    ratio = Ts / x.dt
    step = int(round(ratio))
    if step < 1 or abs(ratio - step) > 1e-9 * ratio:
        raise ValueError(f"Ts/dt = {ratio} is not a positive integer")
    return np.array(x.values[::step])


def normalize_peak(x: FineSignal) -> tuple[FineSignal, float]:
    """Scale ``x`` to unit peak magnitude; returns the signal and the scale."""
    scale = float(np.max(np.abs(x.values)))
    if scale == 0.0:
        raise ValueError("cannot normalize an all-zero signal")
    return x.with_values(x.values / scale), scale


def noise_std(samples, snr_db: float | None) -> float:
    """Noise standard deviation giving ``snr_db`` against the mean power of ``samples``."""
    if snr_db is None or math.isinf(snr_db) and snr_db > 0:
        return 0.0
    power = float(np.mean(np.asarray(samples, dtype=float) ** 2))
    return math.sqrt(power * 10.0 ** (-snr_db / 10.0))


def add_noise(samples, snr_db: float | None, seed=None) -> np.ndarray:
    """Add white Gaussian noise at ``snr_db`` relative to the sample power.

    ``snr_db`` of ``None`` or ``+inf`` leaves the samples unchanged.  ``seed``
    is anything ``numpy.random.default_rng`` accepts, including a Generator.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("cannot add noise to an empty sequence")
    if snr_db is None or math.isinf(snr_db) and snr_db > 0:
        return samples.copy()
    sigma = noise_std(samples, snr_db)
    rng = np.random.default_rng(seed)
    return samples + sigma * rng.standard_normal(samples.shape)
