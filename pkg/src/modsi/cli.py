"""Command line entry point: ``modsi {demo,sweep,inspect-filter,ecg,version}``.

Exit codes: 0 success, 1 configuration or input error, 2 recovery failure
(singular correction filter, lattice rounding failure).
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import SCHEMA_VERSION, ConfigError, load_config, sweep_configs
from .ecg import (PulseTrainSpec, RecordingFormatError, detect_beats, ecg_roundtrip, extract_pulse,
                  load_recording, synthetic_pulse)
from .estimators import ModuloAcquisition
from .harness import plot_sweep, run_sweep, sweep_csv
from .spectral import SingularFilterError, band_bins, build_correction, extract_coefficients, mixer_to_R
from .analog_chain import FoldedSamples, fold
from .unfolding import LatticeRoundingError, make_unfolder

EXIT_OK, EXIT_CONFIG, EXIT_RECOVERY = 0, 1, 2


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (int, str)) else f"{v:.12g}" for v in row])


def cmd_demo(args) -> int:
    doc = load_config(args.config)
    cfg = sweep_configs(doc, seed=args.seed)[0]
    rng = np.random.default_rng([cfg.seed, 0])
    a = rng.uniform(-1.0, 1.0, cfg.n_coeffs)
    acq = ModuloAcquisition(cfg.generator, cfg.T, cfg.oversampling, cfg.lam, cfg.mixer,
                            cfg.pad, cfg.right_pad, cfg.q)
    st = acq.acquire(a)
    scale = st["scale"]
    out = _outdir(args.out)
    y = st["y"]
    _write_rows(out / "demo.csv", ["t", "x", "y", "folded"],
                zip(y.t, st["x"].values / scale, y.values, fold(y.values, cfg.lam)))

    folded = FoldedSamples(cfg.lam, cfg.Ts, st["folded"], t0=y.t0)
    report = make_unfolder(cfg.unfolder, beta=1.0, oversampling=cfg.oversampling).unfold(folded)
    ts = y.t0 + cfg.Ts * np.arange(len(folded))
    _write_rows(out / "samples.csv", ["t", "y", "folded", "unfolded"],
                zip(ts, st["samples"], folded.values, report.samples))

    omega = band_bins(len(folded), cfg.Ts, cfg.T)
    filt = build_correction(mixer_to_R(cfg.generator, cfg.mixer, omega, cfg.T), eps=cfg.epsilon)
    a_hat = extract_coefficients(report.samples, filt, cfg.Ts) * scale
    truth = np.concatenate([np.zeros(cfg.pad), a, np.zeros(cfg.right_pad)])
    n = np.arange(truth.size) - cfg.pad
    _write_rows(out / "coefficients.csv", ["n", "a", "a_hat"],
                ((int(k), u, v) for k, u, v in zip(n, truth, a_hat)))
    err = float(np.max(np.abs(a_hat - truth)))
    print(f"demo: {cfg.n_coeffs} coefficients, lam = {cfg.lam}, T/Ts = {cfg.oversampling}, "
          f"{int(np.count_nonzero(report.counts))} folded samples restored, max |a_hat - a| = {err:.3e}")
    print(f"wrote {out / 'demo.csv'}, {out / 'samples.csv'}, {out / 'coefficients.csv'}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    doc = load_config(args.config)
    cfgs = sweep_configs(doc, full=args.full, seed=args.seed)
    rows = []
    for cfg in cfgs:
        rows.extend(run_sweep(cfg, workers=args.workers))
    out = _outdir(args.out)
    text = sweep_csv(rows)
    (out / "sweep.csv").write_text(text)
    plot_sweep(rows, out / "sweep.svg", title=doc.get("title", ""))
    sys.stdout.write(text)
    return EXIT_OK


def cmd_inspect_filter(args) -> int:
    doc = load_config(args.config)
    out = _outdir(args.out) if args.out else None
    status = EXIT_OK
    for cfg in sweep_configs(doc):
        n_samples = cfg.window * cfg.oversampling
        omega = band_bins(n_samples, cfg.Ts, cfg.T)
        R = mixer_to_R(cfg.generator, cfg.mixer, omega, cfg.T)
        mag = np.abs(R.values)
        k = int(np.argmin(mag))
        print(f"[{cfg.label}] {omega.size} band bins, min |R| = {mag[k]:.6g} at omega = "
              f"{omega[k] / np.pi:+.4f}*pi, max |R| = {mag.max():.6g}")
        if out is not None:
            R.to_csv(out / f"R_{cfg.label}.csv")
        try:
            filt = build_correction(R, eps=cfg.epsilon)
        except SingularFilterError as exc:
            print(f"modsi: [{cfg.label}] {exc}", file=sys.stderr)
            status = EXIT_RECOVERY
            continue
        print(f"[{cfg.label}] max |1/R| = {np.max(np.abs(filt.response)):.6g}")
        if out is not None:
            filt.to_csv(out / f"filter_{cfg.label}.csv")
    return status


def _parse_window(text: str):
    try:
        start, end = (float(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError(f"--pulse-window must look like START:END in seconds, got {text!r}") from None
    return start, end


def cmd_ecg(args) -> int:
    params = {}
    if args.config:
        params = load_config(args.config).get("ecg", {})
        unknown = set(params) - {"T", "lam_rel", "oversampling", "cutoff_bands", "unfolder", "combine"}
        if unknown:
            raise ConfigError(f"unknown ecg keys {sorted(unknown)}")
    T = float(params.get("T", 0.05))
    if args.input:
        rec = load_recording(args.input, args.rate, skip_header=args.skip_header, column=args.column)
        pulse = extract_pulse(rec, _parse_window(args.pulse_window), baseline=args.baseline)
    else:
        rec = None
        pulse = synthetic_pulse(args.rate)
    if args.beats == "auto":
        if rec is None:
            raise ConfigError("--beats auto needs --input")
        offset = float(np.argmax(np.abs(pulse.pulse.values))) * pulse.pulse.dt
        beats = detect_beats(rec, T, offset=offset)
    else:
        try:
            beats = tuple(int(b) for b in args.beats.split(",") if b.strip())
        except ValueError:
            raise ConfigError(f"--beats must be 'auto' or comma separated integers, got {args.beats!r}") from None
    spec = PulseTrainSpec(beats, pulse, T)
    report = ecg_roundtrip(
        spec,
        lam_rel=float(params.get("lam_rel", 0.1)),
        oversampling=int(params.get("oversampling", 5)),
        cutoff=float(params.get("cutoff_bands", 5)) * np.pi / T,
        unfolder=params.get("unfolder"),
        combine=params.get("combine", "average"),
    )
    text = report.summary() + "\n"
    sys.stdout.write(text)
    if args.out:
        out = _outdir(args.out)
        report.to_csv(out / "ecg.csv")
        (out / "ecg_report.txt").write_text(text)
    return EXIT_OK


def cmd_version(args) -> int:
    print(f"modsi {__version__} (config schema {SCHEMA_VERSION})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="modsi", description="Modulo sampling in shift-invariant spaces")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("demo", help="run one noiseless acquisition and recovery, write every stage")
    d.add_argument("--config", required=True)
    d.add_argument("--out", default="results")
    d.add_argument("--seed", type=int)
    d.set_defaults(func=cmd_demo)

    s = sub.add_parser("sweep", help="MSE versus SNR over randomized trials")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default="results")
    s.add_argument("--full", action="store_true", help="use the full trial count (default 500)")
    s.add_argument("--seed", type=int, help="override the master seed")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("inspect-filter", help="effective spectrum R and correction filter on the band")
    f.add_argument("--config", required=True)
    f.add_argument("--out")
    f.set_defaults(func=cmd_inspect_filter)

    e = sub.add_parser("ecg", help="fold and recover an ECG pulse train")
    e.add_argument("--input", help="recording, one sample per row (omit for the synthetic pulse)")
    e.add_argument("--rate", type=float, default=1000.0)
    e.add_argument("--pulse-window", default="0.40:1.10")
    e.add_argument("--beats", default="auto")
    e.add_argument("--skip-header", action="store_true")
    e.add_argument("--column", type=int, default=0)
    e.add_argument("--baseline", choices=["mean", "linear", "none"], default="linear")
    e.add_argument("--config", help="JSON with an 'ecg' object (T, lam_rel, oversampling, ...)")
    e.add_argument("--out")
    e.set_defaults(func=cmd_ecg)

    v = sub.add_parser("version", help="print toolkit and config schema versions")
    v.set_defaults(func=cmd_version)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SingularFilterError, LatticeRoundingError) as exc:
        print(f"modsi: recovery failed: {exc}", file=sys.stderr)
        return EXIT_RECOVERY
    except (ConfigError, RecordingFormatError, ValueError, OSError) as exc:
        print(f"modsi: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
