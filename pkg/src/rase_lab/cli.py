"""Command-line entry point: simulate | analyze | reproduce | calibrate-vacuum."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import figures
from .analysis.stats import default_b_grid, inseparability_sweep
from .config import ConfigError, RunConfig, load_config, parse_assignments
from .dsp import VacuumCalibration
from .pipeline import Extractor, calibrate_vacuum, extract_records, iter_batches, synthesize_batch
from .shotfile import ShotFileError, ShotWriter, iter_shots, read_header

log = logging.getLogger("rase_lab")


def _config(args) -> RunConfig:
    cfg = load_config(args.config, parse_assignments(args.set))
    run = cfg.run
    if args.seed is not None:
        run = replace(run, seed=args.seed)
    if args.shots is not None:
        if args.shots < 1:
            raise ConfigError("--shots must be at least 1")
        run = replace(run, n_shots=args.shots)
    return replace(cfg, run=run)


def cmd_simulate(cfg: RunConfig, out, vacuum=False, workers=None) -> Path:
    lay = figures.layout_for(cfg)
    kind = "vacuum" if vacuum else "signal"
    out = Path(out)
    with ShotWriter(out, cfg.physics.sample_rate_hz, lay.n_samples, cfg.run.n_shots) as w:
        for ids in iter_batches(cfg.run.n_shots):
            for rec in synthesize_batch(lay, ids, cfg.run.seed, cfg.run.v_preloss, kind, workers):
                w.write(rec)
    return out


def cmd_calibrate_vacuum(cfg: RunConfig, out, workers=None) -> VacuumCalibration:
    lay = figures.layout_for(cfg)
    cal = calibrate_vacuum(lay, cfg.run.vacuum_shots, cfg.run.seed, workers)
    cal.save(out)
    return cal


def cmd_analyze(cfg: RunConfig, shot_file, calibration_path, out_dir, workers=None, dump_quads=False):
    if calibration_path is None:
        raise ConfigError("analyze needs a vacuum calibration (--calibration)")
    cal = VacuumCalibration.load(calibration_path)
    lay = figures.layout_for(cfg)
    head = read_header(shot_file)
    rate, n_samples = head["sample_rate_hz"], head["n_samples"]
    if rate != lay.params.sample_rate_hz or n_samples != lay.n_samples:
        raise ConfigError(f"shot file grid ({n_samples} samples @ {rate:g} Hz) does not match the "
                          f"configured layout ({lay.n_samples} @ {lay.params.sample_rate_hz:g} Hz)")
    ex = extract_records(lay, iter_shots(shot_file), Extractor(
        lay, quantize=cfg.run.quantize_delay, min_snr=cfg.run.min_ref_snr, workers=workers))
    out = Path(out_dir)
    grid = default_b_grid(cfg.run.b_points)
    curves = {p: inseparability_sweep(ex.quads(p, cal), grid) for p in lay.timing.pair_labels()}
    files = [figures.write_curve_csv(out / f"insep_{p}.csv", c) for p, c in curves.items()]
    if dump_quads:
        files.append(figures.write_quads_csv(out / "quadratures.csv", ex, curves, cal))
    return curves, ex, files


def _add_common(p):
    p.add_argument("--config", help="INI config file")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config key")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--shots", type=int, help="number of shots")
    p.add_argument("--threads", type=int, help="worker threads (default: RASE_LAB_THREADS or all cores)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rase-lab", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("simulate", help="write a shot file")
    _add_common(p)
    p.add_argument("--out", required=True, help="shot file to write")
    p.add_argument("--vacuum", action="store_true", help="signal-free shots")

    p = sub.add_parser("calibrate-vacuum", help="write a vacuum calibration (JSON)")
    _add_common(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("analyze", help="criterion curves from a shot file")
    _add_common(p)
    p.add_argument("shot_file")
    p.add_argument("--calibration", help="vacuum calibration from calibrate-vacuum")
    p.add_argument("--out", required=True, help="output directory for CSVs")
    p.add_argument("--dump-quads", action="store_true", help="also write per-shot quadratures")

    p = sub.add_parser("reproduce", help="run a figure preset and check its envelope")
    _add_common(p)
    p.add_argument("--figure", required=True, choices=figures.FIGURES)
    p.add_argument("--out", required=True, help="output directory for CSVs")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.cmd == "simulate":
            path = cmd_simulate(cfg, args.out, args.vacuum, args.threads)
            print(f"wrote {cfg.run.n_shots} shots to {path}")
            return 0
        if args.cmd == "calibrate-vacuum":
            cal = cmd_calibrate_vacuum(cfg, args.out, args.threads)
            gains = " ".join(f"{k}={v:.5f}" for k, v in cal.gains.items())
            print(f"calibration from {cal.n_shots} vacuum shots: {gains}")
            return 0
        if args.cmd == "analyze":
            curves, ex, _ = cmd_analyze(cfg, args.shot_file, args.calibration, args.out,
                                        args.threads, args.dump_quads)
            for pair, c in curves.items():
                print(f"{pair}: i_min={c.i_min:.4f} b_min={c.b_min:.4f} sigma={c.sigma_min:.4f} "
                      f"confidence={c.confidence:.3f} n={c.n_shots} excluded={ex.n_excluded}")
            return 0
        res = figures.reproduce(args.figure, cfg, args.out, args.threads)
        print(res.summary_line())
        for name, ok in res.checks.items():
            print(f"  {name}: {'pass' if ok else 'FAIL'}")
        return 0 if res.passed else 1
    except (ConfigError, ShotFileError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
