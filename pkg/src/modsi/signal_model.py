"""Generator pulses, their spectra, and synthesis of shift-invariant signals.

A shift-invariant (SI) signal is ``x(t) = sum_n a[n] h(t - n T)`` for a
generator ``h``.  Everything here is evaluated on a uniform "fine" grid that
stands in for continuous time.

Sinc convention
---------------
Throughout the package ``sinc(u) = sin(u/2) / (u/2)`` with ``sinc(0) = 1``.
With this choice the continuous-time Fourier transform of the unit box
``1_[-1/2, 1/2)`` is exactly ``sinc(omega)``, so the order-``n`` B-spline has
spectrum ``sinc(omega) ** (n + 1)``.  Note that ``numpy.sinc`` uses the
normalised convention ``sin(pi x)/(pi x)``; the two are related by
``sinc(u) == numpy.sinc(u / (2 pi))``.

All frequencies are angular (rad/s).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "sinc",
    "Grid",
    "FineSignal",
    "Generator",
    "Lorentzian",
    "BSpline",
    "Sinc",
    "Tabulated",
    "SISpec",
    "generator_value",
    "generator_spectrum",
    "synthesize",
    "default_grid",
    "bspline_closed_form",
]

# samples per unit width used for the numeric B-spline recursion (n >= 2)
_BSPLINE_RES = 1024


def sinc(u):
    """``sin(u/2) / (u/2)``, the transform of the unit box."""
    return np.sinc(np.asarray(u, dtype=float) / (2.0 * np.pi))


@dataclass(frozen=True)
class Grid:
    """Uniform time grid ``t0 + k*dt`` for ``k = 0..n-1``."""

    t0: float
    dt: float
    n: int

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"grid step must be positive and finite, got {self.dt}")
        if self.n < 1:
            raise ValueError(f"grid needs at least one point, got n={self.n}")

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def duration(self) -> float:
        return self.n * self.dt


@dataclass(frozen=True, eq=False)
class FineSignal:
    """Real waveform sampled on a uniform grid (the emulated analog domain)."""

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size < 1:
            raise ValueError("FineSignal needs at least one value")
        if not np.all(np.isfinite(values)):
            raise ValueError("FineSignal values must be finite")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    @property
    def grid(self) -> Grid:
        return Grid(self.t0, self.dt, self.values.size)

    def __len__(self):
        return self.values.size

    def with_values(self, values) -> "FineSignal":
        return FineSignal(self.t0, self.dt, values)


class Generator:
    """Base class for generating pulses ``h(t)`` with spectrum ``H(omega)``."""

    #: half-width of the support, or None if the pulse is not compactly supported
    support: tuple[float, float] | None = None

    def value(self, t):
        raise NotImplementedError

    def spectrum(self, omega):
        raise NotImplementedError

    def periodized(self, t, period: float):
        """``sum_m h(t + m*period)``, the pulse wrapped onto one period."""
        if self.support is None:
            raise NotImplementedError(
                f"{type(self).__name__} has no compact support and no closed-form periodization"
            )
        lo, hi = self.support
        t = np.asarray(t, dtype=float)
        # reduce to one period first so the replica range is small
        t_red = t - period * np.floor((t - lo) / period)
        n_rep = int(math.ceil((hi - lo) / period)) + 1
        out = np.zeros_like(t_red)
        for m in range(-n_rep, n_rep + 1):
            out += self.value(t_red + m * period)
        return out


@dataclass(frozen=True)
class Lorentzian(Generator):
    """Cauchy pulse ``1 / (pi*gamma*(1 + (t/gamma)^2))`` with ``H = exp(-gamma|w|)``."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"Lorentzian scale must be positive, got {self.gamma}")

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return 1.0 / (np.pi * self.gamma * (1.0 + (t / self.gamma) ** 2))

    def spectrum(self, omega):
        return np.exp(-self.gamma * np.abs(np.asarray(omega, dtype=float))).astype(complex)

    def periodized(self, t, period: float):
        # Poisson summation of the Cauchy kernel (wrapped Cauchy density)
        r = math.exp(-2.0 * math.pi * self.gamma / period)
        theta = 2.0 * np.pi * np.asarray(t, dtype=float) / period
        return (1.0 - r * r) / (period * (1.0 - 2.0 * r * np.cos(theta) + r * r))


@functools.lru_cache(maxsize=8)
def _bspline_table(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit-scale B-spline of ``order`` by repeated box convolution on a grid.

    Boxes are sampled cell-centred so the result stays symmetric about 0.
    """
    box = np.ones(_BSPLINE_RES)
    vals = box
    for _ in range(order):
        vals = np.convolve(vals, box) / _BSPLINE_RES
    t = (np.arange(vals.size) - (vals.size - 1) / 2.0) / _BSPLINE_RES
    half = (order + 1) / 2.0
    t = np.concatenate(([-half], t, [half]))
    vals = np.concatenate(([0.0], vals, [0.0]))
    t.setflags(write=False)
    vals.setflags(write=False)
    return t, vals


def bspline_closed_form(t, order: int):
    """Unit B-spline via the truncated-power formula (independent of the recursion)."""
    t = np.asarray(t, dtype=float)
    n = order
    out = np.zeros_like(t)
    for k in range(n + 2):
        shifted = t + (n + 1) / 2.0 - k
        out += (-1) ** k * math.comb(n + 1, k) * np.where(shifted > 0, shifted, 0.0) ** n
    return out / math.factorial(n)


@dataclass(frozen=True)
class BSpline(Generator):
    """Unit-area B-spline of ``order`` stretched by ``scale``.

    ``value(t) = beta_n(t/scale) / scale`` so that the spectrum is exactly
    ``sinc(scale*omega) ** (order+1)``.  The order-0 box is half-open,
    ``[-scale/2, scale/2)``.
    """

    order: int
    scale: float = 1.0

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 0:
            raise ValueError(f"B-spline order must be a non-negative integer, got {self.order}")
        if not self.scale > 0:
            raise ValueError(f"B-spline scale must be positive, got {self.scale}")

    @property
    def support(self):
        half = self.scale * (self.order + 1) / 2.0
        return (-half, half)

    def value(self, t):
        u = np.asarray(t, dtype=float) / self.scale
        if self.order == 0:
            v = ((u >= -0.5) & (u < 0.5)).astype(float)
        elif self.order == 1:
            v = np.clip(1.0 - np.abs(u), 0.0, None)
        else:
            grid_t, grid_v = _bspline_table(int(self.order))
            half = (self.order + 1) / 2.0
            v = np.interp(u, grid_t, grid_v, left=0.0, right=0.0)
            v = np.where(np.abs(u) >= half, 0.0, v)
        return v / self.scale

    def spectrum(self, omega):
        w = np.asarray(omega, dtype=float)
        return (sinc(self.scale * w) ** (self.order + 1)).astype(complex)


@dataclass(frozen=True)
class Sinc(Generator):
    """Ideal low-pass pulse ``sin(W t)/(pi t)``; ``H = 1`` on ``|w| < W``.

    At the band edge ``|w| == W`` the spectrum takes the midpoint value 1/2.
    """

    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError(f"Sinc bandwidth must be positive, got {self.bandwidth}")

    def value(self, t):
        t = np.asarray(t, dtype=float)
        w = self.bandwidth
        return (w / np.pi) * np.sinc(w * t / np.pi)

    def spectrum(self, omega):
        w = np.abs(np.asarray(omega, dtype=float))
        edge = np.isclose(w, self.bandwidth, rtol=1e-12, atol=0.0)
        out = np.where(w < self.bandwidth, 1.0, 0.0)
        out = np.where(edge, 0.5, out)
        return out.astype(complex)

    def periodized(self, t, period: float):
        t = np.asarray(t, dtype=float)
        k_max = int(math.floor(self.bandwidth * period / (2.0 * np.pi) * (1 + 1e-12)))
        out = np.full_like(t, self.spectrum(0.0).real / period)
        for k in range(1, k_max + 1):
            weight = self.spectrum(2.0 * np.pi * k / period).real
            out += 2.0 * weight / period * np.cos(2.0 * np.pi * k * t / period)
        return out


@dataclass(frozen=True, eq=False)
class Tabulated(Generator):
    """Measured pulse given on a grid; zero outside the tabulated span."""

    pulse: FineSignal

    @property
    def support(self):
        t = self.pulse.t
        return (float(t[0]), float(t[-1]))

    def value(self, t):
        p = self.pulse
        return np.interp(np.asarray(t, dtype=float), p.t, p.values, left=0.0, right=0.0)

    def spectrum(self, omega):
        # Riemann sum of the continuous transform with weight dt
        w = np.asarray(omega, dtype=float)
        p = self.pulse
        phase = np.exp(-1j * np.multiply.outer(w, p.t))
        return phase @ p.values * p.dt


def generator_value(g: Generator, t):
    return g.value(t)


def generator_spectrum(g: Generator, omega):
    return g.spectrum(omega)


@dataclass(frozen=True, eq=False)
class SISpec:
    """Finite coefficient window ``a[n0 .. n0+len-1]`` on shifts of ``T``."""

    T: float
    coeffs: np.ndarray
    generator: Generator
    n0: int = 0

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float).reshape(-1)
        if coeffs.size < 1:
            raise ValueError("SISpec needs at least one coefficient")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        if not self.T > 0:
            raise ValueError(f"shift period T must be positive, got {self.T}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def n1(self) -> int:
        return self.n0 + self.coeffs.size - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n0, self.n1 + 1)


def default_grid(spec: SISpec, oversampling: int, q: int = 16, pad: int = 20,
                 pad_right: int | None = None) -> Grid:
    """Fine grid with ``dt = T/(oversampling*q)`` padded by whole shifts.

    The window is ``[(n0 - pad) T, (n1 + 1 + pad_right) T)``, an integer
    number of shifts, so it can also be treated as one period.
    """
    pad_right = pad if pad_right is None else pad_right
    per_shift = int(oversampling) * int(q)
    n_shifts = spec.coeffs.size + pad + pad_right
    return Grid(t0=(spec.n0 - pad) * spec.T, dt=spec.T / per_shift, n=n_shifts * per_shift)


def synthesize(spec: SISpec, grid: Grid, periodic: bool = False) -> FineSignal:
    """Evaluate ``x(t) = sum_n a[n] h(t - nT)`` on ``grid``.

    With ``periodic=True`` the grid window is treated as one period: the
    generator is replaced by its periodization, so the result is the SI
    signal whose coefficients repeat with the window length.  The periodized
    generator is built from its Fourier series up to the grid Nyquist
    frequency, so generators that are not bandlimited (splines) differ from
    their point samples by the aliasing they would otherwise fold into the
    grid.  This requires the window to be a whole number of shifts and
    ``T/dt`` to be an integer.
    Non-periodic synthesis evaluates the generator exactly on the grid; any
    tail beyond the window is simply not represented.
    """
    if grid.dt >= spec.T:
        raise ValueError(f"grid step {grid.dt} must be finer than the shift period {spec.T}")
    g = spec.generator
    if not periodic:
        t = grid.t
        x = np.zeros(grid.n)
        for n, a in zip(spec.indices, spec.coeffs):
            if a != 0.0:
                x += a * g.value(t - n * spec.T)
        return FineSignal(grid.t0, grid.dt, x)

    step = spec.T / grid.dt
    n_period = grid.duration / spec.T
    if abs(step - round(step)) > 1e-9 * step or abs(n_period - round(n_period)) > 1e-9 * n_period:
        raise ValueError("periodic synthesis needs T/dt and the window length in shifts to be integers")
    step = int(round(step))
    # Fourier series of the periodized generator, truncated at the grid
    # Nyquist: the grid signal carries no aliased generator energy
    omega = 2.0 * np.pi * np.fft.rfftfreq(grid.n, d=grid.dt)
    offset = grid.t0 - spec.n0 * spec.T
    base_hat = g.spectrum(omega) * np.exp(1j * omega * offset) / grid.dt
    impulses = np.zeros(grid.n)
    pos = ((spec.indices - spec.n0) * step) % grid.n
    np.add.at(impulses, pos, spec.coeffs)
    x = np.fft.irfft(np.fft.rfft(impulses) * base_hat, n=grid.n)
    return FineSignal(grid.t0, grid.dt, x)
