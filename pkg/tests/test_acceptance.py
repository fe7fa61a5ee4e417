"""The ten acceptance criteria, each at its stated tolerance and runtime budget.

Every check appends one ``criterion N: PASS|FAIL ...`` line to the session
summary.  Run directly (``python tests/test_acceptance.py``) to print the
lines without pytest.
"""
from __future__ import annotations

import functools
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from modsi.analog_chain import FoldedSamples, MixerSpec, fold
from modsi.config import load_config, sweep_configs
from modsi.ecg import PulseTrainSpec, ecg_roundtrip, synthetic_pulse
from modsi.estimators import ModuloAcquisition
from modsi.harness import REPORTED_ENERGY_LOSS, SweepConfig, energy_loss, run_sweep, sweep_csv
from modsi.signal_model import BSpline, Lorentzian
from modsi.spectral import (SingularFilterError, band_bins, build_correction, extract_coefficients,
                            mixer_to_R)
from modsi.unfolding import unfold_itoh

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
MIX200 = MixerSpec.from_cosines(1.0, 1.0, [(1, 200), (2, 200)])
MIX1000 = MixerSpec.from_cosines(1.0, 1.0, [(1, 1000), (2, 1000)])


def _line(n: int, ok: bool, detail: str, elapsed: float, budget: float) -> str:
    return f"criterion {n}: {'PASS' if ok else 'FAIL'} ({elapsed:.2f}s / {budget:g}s) {detail}"


def criterion_1():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    n = 0
    idem = identity = in_range = boundary = True
    period = 0.0
    for lam in rng.uniform(0.01, 10.0, 100):
        # 1000 cases per threshold, 100 thresholds
        x = rng.uniform(-50.0, 50.0, 1000) * lam
        fx = fold(x, lam)
        idem &= np.array_equal(fold(fx, lam), fx)
        period = max(period, float(np.max(np.abs(fold(x + 2.0 * lam, lam) - fx))))
        inside = rng.uniform(-1.0, 1.0, 1000) * lam
        identity &= np.array_equal(fold(inside, lam), inside)
        in_range &= bool(np.all((fx >= -lam) & (fx < lam)))
        boundary &= fold(lam, lam) == -lam and fold(-lam, lam) == -lam
        n += x.size
    elapsed = time.perf_counter() - t0
    ok = idem and period <= 1e-12 and identity and in_range and boundary and elapsed < 5
    detail = (f"{n} cases: idempotent={idem}, max 2lam-periodicity error={period:.1e}, "
              f"in-range identity={identity}, range [-lam, lam)={in_range}, M(+-lam)=-lam {boundary}")
    return ok, _line(1, ok, detail, elapsed, 5)


def criterion_2():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    worst, exact = 0.0, 0
    for _ in range(1000):
        lam = rng.uniform(0.05, 2.0)
        n = int(rng.integers(2, 400))
        steps = rng.uniform(-0.999, 0.999, n - 1) * lam
        y = np.concatenate([[rng.uniform(-0.999, 0.999) * lam], steps]).cumsum()
        got = unfold_itoh(FoldedSamples(lam, 1.0, fold(y, lam))).samples
        err = float(np.max(np.abs(got - y)))
        worst = max(worst, err)
        exact += bool(np.array_equal(got, y))
    elapsed = time.perf_counter() - t0
    ok = worst == 0.0 and elapsed < 5
    return ok, _line(2, ok, f"1000 walks, bit-exact {exact}/1000, max error {worst:.1e}", elapsed, 5)


def _noiseless(mixer):
    cfg = SweepConfig(Lorentzian(0.5), T=1.0, n_coeffs=50, lam=0.2, oversampling=5, mixer=mixer,
                      unfolder={"unfolder": "hod", "order": 3}, snr_db=(None,), trials=20, seed=7,
                      label="noiseless")
    _, trials = run_sweep(cfg, return_trials=True)
    return max(r.mse_coef_db for r in trials), sum(r.failed for r in trials)


def criterion_3():
    t0 = time.perf_counter()
    worst, fails = _noiseless(None)
    elapsed = time.perf_counter() - t0
    ok = worst <= -60 and fails == 0 and elapsed < 30
    return ok, _line(3, ok, f"Lorentzian 0.5, no mixer, 20 trials: worst interior MSE {worst:.1f} dB "
                            f"(<= -60), failures {fails}", elapsed, 30)


def criterion_4():
    t0 = time.perf_counter()
    worst, fails = _noiseless(MIX200)
    # identity mixer: 1/H and 1/R with R = H must give the same coefficients
    g = Lorentzian(0.5)
    a = np.random.default_rng(404).uniform(-1.0, 1.0, 50)
    samples = ModuloAcquisition(g).acquire(a)["samples"]
    omega = band_bins(samples.size, 0.2, 1.0)
    via_H = extract_coefficients(samples, build_correction(mixer_to_R(g, None, omega, 1.0)), 0.2)
    via_R = extract_coefficients(samples, build_correction(mixer_to_R(g, MixerSpec.identity(1.0), omega, 1.0)), 0.2)
    diff = float(np.max(np.abs(via_H - via_R)))
    elapsed = time.perf_counter() - t0
    ok = worst <= -60 and fails == 0 and diff <= 1e-10 and elapsed < 30
    return ok, _line(4, ok, f"mixer 1+200cos+200cos, 20 trials: worst interior MSE {worst:.1f} dB (<= -60); "
                            f"identity mixer |1/H - 1/R| extraction gap {diff:.1e} (<= 1e-10)", elapsed, 30)


def criterion_5():
    t0 = time.perf_counter()
    g = BSpline(1, 2.5)
    n_samples = 90 * 5
    omega = band_bins(n_samples, 0.2, 1.0)
    bin_width = 2.0 * np.pi / 90
    zeros = None
    try:
        build_correction(mixer_to_R(g, None, omega, 1.0))
    except SingularFilterError as exc:
        zeros = sorted(exc.zeros)
    located = (zeros is not None and len(zeros) == 2
               and abs(zeros[0] + 0.8 * np.pi) <= bin_width and abs(zeros[1] - 0.8 * np.pi) <= bin_width)
    min_R = float(np.min(np.abs(mixer_to_R(g, MIX1000, omega, 1.0).values)))
    elapsed = time.perf_counter() - t0
    ok = located and min_R > 1 and elapsed < 5
    where = "none" if zeros is None else ", ".join(f"{w / np.pi:+.4f}pi" for w in zeros)
    return ok, _line(5, ok, f"no mixer: SingularFilterError with zeros at {where}; "
                            f"mixer 1+1000cos+1000cos: min band |R| = {min_R:.3g} (> 1)", elapsed, 5)


@functools.lru_cache(maxsize=None)
def _sweep(name: str, workers: int = 1):
    t0 = time.perf_counter()
    rows = []
    for cfg in sweep_configs(load_config(CONFIGS / name)):
        rows.extend(run_sweep(cfg, workers=workers))
    return rows, time.perf_counter() - t0


def _by_setting(rows):
    out = {}
    for r in rows:
        out.setdefault(r.setting, {})[r.snr_db] = r
    return out


def criterion_6():
    rows, elapsed = _sweep("spline.json")
    s = _by_setting(rows)
    snrs = sorted(s["no_mixer"])
    gap_plain = {snr: s["no_mixer"][snr].mse_coef_db - s["no_mixer"][snr].mse_bl_db for snr in snrs}
    gap_mix = {snr: s["mixer"][snr].mse_coef_db - s["mixer"][snr].mse_bl_db for snr in snrs}
    ok = (all(20 <= v <= 40 for v in gap_plain.values()) and all(v <= 10 for v in gap_mix.values())
          and elapsed < 300)
    fmt = lambda d: ", ".join(f"{snr:g} dB: {v:.1f}" for snr, v in d.items())
    return ok, _line(6, ok, f"scaled spline, 50 trials, gap mse_coef - mse_bl [dB]; no mixer (need 20..40) "
                            f"{fmt(gap_plain)}; mixer (need <= 10) {fmt(gap_mix)}", elapsed, 300)


def criterion_7():
    parts, ok, total = [], True, 0.0
    for name, gamma in (("lorentzian.json", 0.5), ("lorentzian_025.json", 0.25)):
        rows, elapsed = _sweep(name)
        total += elapsed
        s = _by_setting(rows)
        parity = max(abs(s["mixer"][k].mse_coef_db - s["no_mixer"][k].mse_coef_db) for k in s["mixer"])
        track = max(abs(r.mse_coef_db - r.mse_bl_db) for r in rows)
        finite = all(math.isfinite(r.mse_coef_db) for r in rows)
        ok &= parity <= 10 and track <= 6 and finite
        parts.append(f"gamma {gamma}: max |mixer - no mixer| {parity:.2f} dB (<= 10), "
                     f"max |coef - bl| {track:.2f} dB (<= 6)")
    ok &= total < 600
    return ok, _line(7, ok, "; ".join(parts), total, 600)


def criterion_8():
    t0 = time.perf_counter()
    e05, e025 = energy_loss(Lorentzian(0.5), 1.0), energy_loss(Lorentzian(0.25), 1.0)
    elapsed = time.perf_counter() - t0
    closed = abs(e05 - math.exp(-math.pi)) <= 1e-12 and abs(e025 - math.exp(-math.pi / 2)) <= 1e-12
    ok = e025 > e05 and closed and elapsed < 1
    return ok, _line(8, ok, f"energy loss gamma 0.25: {e025:.4f} (reported elsewhere as {REPORTED_ENERGY_LOSS[0.25]:.3f}), "
                            f"gamma 0.5: {e05:.4f} (reported elsewhere as {REPORTED_ENERGY_LOSS[0.5]:.3f}); "
                            f"ordering holds; values are the out-of-band share of |H|^2, "
                            f"the 11%/2.2% figures use an unstated definition", elapsed, 1)


def criterion_9():
    t0 = time.perf_counter()
    rng = np.random.default_rng(909)
    sets = [(10, 40, 75)] + [tuple(sorted(rng.choice(90, size=int(rng.integers(1, 12)), replace=False).tolist()))
                             for _ in range(5)]
    pulse = synthetic_pulse()
    results = []
    for beats in sets:
        r = ecg_roundtrip(PulseTrainSpec(beats, pulse, T=0.05), lam_rel=0.1, oversampling=5,
                          cutoff=5 * np.pi / 0.05)
        changed = int(np.count_nonzero(np.abs(r.folded - r.original) > 1e-9))
        results.append((r.recovered_beats == tuple(beats), r.folding_active and changed > 0, changed))
    elapsed = time.perf_counter() - t0
    ok = all(a and b for a, b, _ in results) and elapsed < 30
    exact = sum(a for a, _, _ in results)
    folded = min(c for _, _, c in results)
    return ok, _line(9, ok, f"{len(sets)} pulse trains (incl. beats 10, 40, 75): exact beat sets {exact}/{len(sets)}, "
                            f"fewest folded samples per train {folded}", elapsed, 30)


def criterion_10():
    t0 = time.perf_counter()
    base = sweep_csv(_sweep("lorentzian.json", 1)[0])
    same = {w: sweep_csv(_sweep.__wrapped__("lorentzian.json", w)[0]) == base for w in (1, 2, 4)}
    elapsed = time.perf_counter() - t0
    ok = all(same.values())
    detail = ", ".join(f"workers={w}: {'identical' if v else 'DIFFERENT'}" for w, v in same.items())
    return ok, _line(10, ok, f"Lorentzian sweep CSV re-run {detail}", elapsed, 600)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.slow
@pytest.mark.parametrize("check", CRITERIA, ids=[f"criterion_{i + 1}" for i in range(len(CRITERIA))])
def test_acceptance(check, acceptance_log):
    ok, line = check()
    acceptance_log.append(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    failures = 0
    for check in CRITERIA:
        ok, line = check()
        failures += not ok
        print(line, flush=True)
    sys.exit(1 if failures else 0)
