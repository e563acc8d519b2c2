"""Command-line entry point: ``tablawave {synth,analyze,stats,categorize,plotdata}``."""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import pipeline as pl
from .audio_io import StrokeLabel, SynthStrokeSpec, load_synth_spec, read_wav, synthesize_stroke, write_wav
from .features import FEATURE_COLUMNS
from .stats import load_table1
from .subband import BandPlan

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _config(args):
    try:
        cfg = pl.AnalysisConfig.load(args.config) if args.config else pl.AnalysisConfig()
        over = {}
        if args.bands:
            over["plan"] = BandPlan.from_json(Path(args.bands).read_text())
        if args.out is not None:
            over["out"] = args.out
        if args.format is not None:
            over["format"] = args.format
        if args.seed is not None:
            over["seed"] = args.seed
        if getattr(args, "group_by", None):
            over["group_by"] = args.group_by
        if getattr(args, "measure", None):
            over["measure"] = args.measure
        if getattr(args, "tests", None):
            tests = [t.strip() for t in args.tests.split(",") if t.strip()]
            over["tests"] = pl.ALL_TESTS if tests == ["all"] else tuple(tests)
        return replace(cfg, **over) if over else cfg
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _print_partials(spec, label):
    print(f"{'k':>2}  {'freq_hz':>10}  {'ratio':>7}  {'amp':>6}  {'decay_per_s':>11}  level")
    plan = BandPlan()
    for k, (f, r, a, d) in enumerate(zip(spec.partial_frequencies, spec.partial_ratios,
                                         spec.partial_amplitudes, spec.partial_decay_constants), 1):
        lev = plan.level_of(f) or "-"
        print(f"{k:>2}  {f:>10.3f}  {r:>7.4f}  {a:>6.3f}  {d:>11.3f}  {lev}")
    if label is not None:
        print(f"label: {label.stroke_name} ({label.damping}), tabla {label.tabla_id}")


def cmd_synth(args):
    cfg = _config(args)
    out = pl.ensure_dir(cfg.out)
    if args.corpus:
        paths = pl.write_corpus(out, seed=cfg.seed, sample_rate=args.sample_rate or 44100)
        print(f"wrote {len(paths)} clips and {pl.MANIFEST} to {out}")
        return EXIT_OK
    if args.spec:
        try:
            spec, rate, seed, label = load_synth_spec(args.spec)
        except (OSError, ValueError, TypeError) as exc:
            raise UsageError(f"{args.spec}: {exc}") from exc
        stem = Path(args.spec).stem
    else:
        spec, rate, seed, label = SynthStrokeSpec(200.0), 44100, 0, StrokeLabel("Ta/Na")
        stem = "raman"
    if args.seed is not None:
        seed = args.seed
    if args.sample_rate is not None:
        rate = args.sample_rate
    try:
        clip = synthesize_stroke(spec, rate, seed, label)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    path = out / f"{stem}.wav"
    write_wav(clip, path)
    manifest_path = out / pl.MANIFEST
    manifest = json.loads(manifest_path.read_text()) if manifest_path.exists() else {}
    manifest[path.name] = {"label": label.to_dict() if label else None, "spec": spec.to_dict(),
                           "seed": seed, "sample_rate": rate}
    manifest_path.write_text(json.dumps(manifest, indent=1, sort_keys=True))
    _print_partials(spec, label)
    print(f"wrote {path}")
    return EXIT_OK


def _expand_inputs(inputs):
    paths = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.wav")))
        else:
            paths.append(p)
    return paths


def cmd_analyze(args):
    cfg = _config(args)
    out = pl.ensure_dir(cfg.out)
    paths = _expand_inputs(args.inputs)
    if not paths:
        print("warning: no input files; writing an empty feature table", file=sys.stderr)
    fsets, errors = pl.analyze_paths(paths, cfg)
    rows = pl.feature_rows(fsets)
    ext = cfg.format
    pl.write_rows(rows, out / f"features.{ext}", FEATURE_COLUMNS, ext)
    pl.write_rows(pl.table1_from_features(fsets, cfg.plan), out / f"table1.{ext}", pl.TABLE1_COLUMNS, ext)
    pl.write_rows(errors, out / f"errors.{ext}", ("clip", "error"), ext)
    for e in errors:
        print(f"error: {e['clip']}: {e['error']}", file=sys.stderr)
    print(f"analyzed {len(fsets)} of {len(paths)} clips; {len(rows)} feature rows in {out}")
    return EXIT_PARTIAL if errors else EXIT_OK


def _fmt_num(v, digits=4):
    if isinstance(v, float):
        return f"{v:.{digits}f}"
    return str(v)


def _print_report(report):
    for name, entry in report.items():
        if "skipped" in entry:
            print(f"[{name}] skipped: {entry['skipped']}")
            continue
        print(f"[{name}]")
        cols = entry["columns"]
        print("  " + "  ".join(cols))
        for r in entry["rows"]:
            print("  " + "  ".join(_fmt_num(r.get(c, "")) for c in cols))


def cmd_stats(args):
    cfg = _config(args)
    out = pl.ensure_dir(cfg.out)
    if args.table:
        try:
            rows = pl.read_table(args.table)
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"{args.table}: {exc}") from exc
    else:
        rows = load_table1()
    try:
        g = pl.groups_from_rows(rows, cfg.group_by, cfg.measure)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = pl.run_stats(g, cfg.tests)
    pl.write_stats_report(report, out, cfg.format, prefix=f"stats_{cfg.measure}_by_{cfg.group_by}")
    _print_report(report)
    return EXIT_OK


def cmd_categorize(args):
    cfg = _config(args)
    out = pl.ensure_dir(cfg.out)
    try:
        rows = pl.read_table(args.features)
        report = pl.categorize(rows)
        if args.table1:
            pl.attach_cv_profile(report, pl.read_table(args.table1))
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"{args.features}: {exc}") from exc
    path = out / "categorization.json"
    path.write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    for rule in report["rules"]:
        print(f"rule {rule['rule']}: {'holds' if rule['holds'] else 'does not hold'} - {rule['statement']}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_plotdata(args):
    cfg = _config(args)
    out = pl.ensure_dir(cfg.out)
    ext = cfg.format
    if args.features:
        try:
            rows = pl.read_table(args.features)
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"{args.features}: {exc}") from exc
        pl.write_rows(pl.plot_series(rows, "mpf_hz"), out / f"mpf_series.{ext}", pl.SERIES_COLUMNS, ext)
        pl.write_rows(pl.plot_series(rows, "harmonic_count"), out / f"harmonic_count_series.{ext}",
                      pl.SERIES_COLUMNS, ext)
    if args.wav:
        try:
            clip = read_wav(args.wav)
        except (OSError, ValueError) as exc:
            raise UsageError(f"{args.wav}: {exc}") from exc
        scal = pl.clip_scalogram(clip, cfg, args.f_low, args.f_high)
        rows = pl.scalogram_heatmap_rows(scal, args.time_stride, args.scale_stride)
        pl.write_rows(rows, out / f"scalogram_{Path(args.wav).stem}.{ext}", pl.HEATMAP_COLUMNS, ext)
    if not args.features and not args.wav:
        raise UsageError("plotdata needs a feature table and/or --wav")
    print(f"wrote plot data to {out}")
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="analysis config JSON")
    common.add_argument("--out", help="output directory (default: current directory)")
    common.add_argument("--seed", type=int, help="random seed for synthesis noise")
    common.add_argument("--format", choices=("csv", "json"), help="table output format")
    common.add_argument("--bands", help="band plan JSON overriding the default octave plan")

    parser = argparse.ArgumentParser(prog="tablawave", description="Sub-band and wavelet analysis of tabla strokes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="render a synthetic stroke or the fixture corpus")
    p.add_argument("spec", nargs="?", help="SynthStrokeSpec JSON (default: Raman stroke, f0 = 200 Hz)")
    p.add_argument("--corpus", action="store_true", help="render the 45-clip fixture corpus instead")
    p.add_argument("--sample-rate", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", parents=[common], help="extract features from WAV files")
    p.add_argument("inputs", nargs="*", help="WAV files or directories")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("stats", parents=[common], help="run the statistics battery on a table")
    p.add_argument("table", nargs="?", help="CSV/JSON table (default: bundled harmonic table)")
    p.add_argument("--group-by", help="grouping column (subband, tabla, band_level, ...)")
    p.add_argument("--measure", help="value column (cv, mean, sd, harmonic_count, ...)")
    p.add_argument("--tests", help="comma list of " + ",".join(pl.ALL_TESTS) + " or 'all'")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("categorize", parents=[common], help="evaluate the categorization rules")
    p.add_argument("features", help="feature table from 'analyze'")
    p.add_argument("--table1", help="per-band mean/sd table (from 'analyze') for the CV profile")
    p.set_defaults(func=cmd_categorize)

    p = sub.add_parser("plotdata", parents=[common], help="emit figure-ready series")
    p.add_argument("features", nargs="?", help="feature table from 'analyze'")
    p.add_argument("--wav", help="clip to render as a scalogram heat map")
    p.add_argument("--f-low", type=float, default=110.0)
    p.add_argument("--f-high", type=float, default=3520.0)
    p.add_argument("--time-stride", type=int, default=44)
    p.add_argument("--scale-stride", type=int, default=1)
    p.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, pl.ConfigError) as exc:
        print(f"tablawave {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
