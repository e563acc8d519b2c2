"""Batch orchestration: fixture corpus, feature tables, stats reports, categorization."""

import csv
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import stats as st
from .audio_io import (
    DAMPED_ATTACK,
    DAMPED_DECAY,
    FREE_ATTACK,
    FREE_DECAY,
    STROKES,
    TABLA_DIAMETERS,
    StrokeLabel,
    SynthStrokeSpec,
    read_wav,
    synthesize_stroke,
    write_wav,
)
from .cwt import WaveletSpec, cwt_transform
from .features import FeatureConfig, FeatureError, PeakParams, extract_features
from .subband import BandPlan, FilterSpec

__all__ = [
    "AnalysisConfig",
    "ConfigError",
    "FixtureClip",
    "fixture_corpus",
    "write_corpus",
    "analyze_paths",
    "feature_rows",
    "read_table",
    "write_rows",
    "table1_from_features",
    "run_stats",
    "categorize",
    "plot_series",
    "scalogram_heatmap_rows",
    "ALL_TESTS",
]

ALL_TESTS = ("descriptives", "levene", "anova", "welch", "tukey")
GLOBAL_ONLY = ("attack_peak_s", "decay_s", "mpf_time_s")
MANIFEST = "manifest.json"


class ConfigError(ValueError):
    """Invalid analysis configuration."""


@dataclass(frozen=True)
class AnalysisConfig:
    plan: BandPlan = field(default_factory=BandPlan)
    filter_spec: FilterSpec = field(default_factory=FilterSpec)
    peaks: PeakParams = field(default_factory=PeakParams)
    wavelet_dj: float = 0.125
    wavelet_omega0: float = 6.0
    energy_threshold: float = 0.1
    tests: tuple = ALL_TESTS
    group_by: str = "subband"
    measure: str = "cv"
    out: str = "."
    format: str = "csv"
    seed: int = 0

    def __post_init__(self):
        bad = set(self.tests) - set(ALL_TESTS)
        if bad:
            raise ConfigError(f"unknown tests {sorted(bad)}; choose from {ALL_TESTS}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if not 0 < self.energy_threshold < 1:
            raise ConfigError("energy_threshold must lie in (0, 1)")

    def features(self):
        return FeatureConfig(self.plan, self.filter_spec, self.peaks, self.wavelet_dj,
                             self.wavelet_omega0, self.energy_threshold)

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(d)
        try:
            if "plan" in kw:
                kw["plan"] = BandPlan.from_dict(kw["plan"])
            if "filter_spec" in kw:
                kw["filter_spec"] = FilterSpec.from_dict(kw["filter_spec"])
            if "peaks" in kw:
                kw["peaks"] = PeakParams(**kw["peaks"])
            if "tests" in kw:
                kw["tests"] = tuple(kw["tests"])
            return cls(**kw)
        except (TypeError, KeyError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path):
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(doc)


# ---------------------------------------------------------------- fixtures

# Band level of each partial, by damping class and tabla size.
_PARTIAL_LEVELS = {
    ("damped", "small"): (6, 5, 4, 4, 3),
    ("damped", "large"): (5, 4, 3),
    ("free", "small"): (7, 7, 6, 6, 5),
    ("free", "large"): (7, 6, 5),
}
# Index of the loudest partial: a band-4 partial for damped strokes,
# the lowest partial for free strokes.
_STRONGEST = {"damped": 2, "free": 0}


@dataclass(frozen=True)
class FixtureClip:
    clip_id: str
    spec: SynthStrokeSpec
    label: StrokeLabel
    seed: int


def _slug(stroke):
    return stroke.lower().replace("/", "-")


def is_small(tabla_id):
    return TABLA_DIAMETERS[tabla_id] == min(TABLA_DIAMETERS.values())


def _fixture_partials(plan, levels, stroke_index, tabla_id):
    freqs = []
    seen = {}
    for k, lev in enumerate(levels):
        j = seen.get(lev, 0)
        seen[lev] = j + 1
        jitter = 0.04 * math.sin(1.7 * stroke_index + 2.3 * tabla_id + 0.9 * k)
        u = 0.4 + 0.22 * j + jitter
        f_low, _ = plan.edges(lev)
        freqs.append(f_low * 2.0**u)
    return freqs


def fixture_corpus(seed=0, duration=1.0, plan=None):
    """The 45-clip synthetic corpus: 9 strokes on each of 5 virtual tablas.

    Small-diameter tablas carry five partials per stroke, large ones three.
    Damped strokes sit higher (bands 3-6) with their loudest partial in
    band 4, a slower attack and faster decay; free strokes sit in bands
    5-7 with the fundamental loudest.  No partial falls in levels 1, 2 or
    8, and each partial sits between 0.36 and 0.66 of the way up its band
    on a log-frequency scale, clear of the filter transitions.
    """
    plan = plan or BandPlan()
    clips = []
    for tabla_id in sorted(TABLA_DIAMETERS):
        size = "small" if is_small(tabla_id) else "large"
        for i, stroke in enumerate(STROKES):
            label = StrokeLabel(stroke, tabla_id=tabla_id)
            levels = _PARTIAL_LEVELS[(label.damping, size)]
            freqs = _fixture_partials(plan, levels, i, tabla_id)
            strongest = _STRONGEST[label.damping]
            amps = tuple(1.0 if k == strongest else 0.5 * 0.85**k for k in range(len(freqs)))
            f0 = min(freqs)
            if label.damping == "damped":
                decay, attack = DAMPED_DECAY, DAMPED_ATTACK
            else:
                decay, attack = FREE_DECAY, FREE_ATTACK
            spec = SynthStrokeSpec(
                f0, tuple(f / f0 for f in freqs), amps, (decay,) * len(freqs), attack, duration,
            )
            clip_id = f"t{tabla_id}_{_slug(stroke)}"
            clips.append(FixtureClip(clip_id, spec, label, seed + 100 * tabla_id + i))
    return clips


def write_corpus(directory, seed=0, sample_rate=44100, clips=None):
    """Render the fixture corpus to ``directory`` with a label manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    clips = clips if clips is not None else fixture_corpus(seed)
    manifest = {}
    paths = []
    for fc in clips:
        clip = synthesize_stroke(fc.spec, sample_rate, fc.seed, fc.label)
        path = directory / f"{fc.clip_id}.wav"
        write_wav(clip, path)
        paths.append(path)
        manifest[path.name] = {"label": fc.label.to_dict(), "spec": fc.spec.to_dict(), "seed": fc.seed}
    (directory / MANIFEST).write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return paths


# ---------------------------------------------------------------- analysis

def _manifest_label(path, cache):
    d = path.parent
    if d not in cache:
        try:
            cache[d] = json.loads((d / MANIFEST).read_text())
        except (OSError, json.JSONDecodeError):
            cache[d] = {}
    entry = cache[d].get(path.name)
    if entry and "label" in entry:
        return StrokeLabel(**entry["label"])
    return None


def analyze_paths(paths, config=None):
    """Extract features from WAV files.

    Labels come from a ``manifest.json`` next to each file when present.
    Failures are collected per file instead of aborting the batch.

    Returns
    -------
    feature_sets : list of StrokeFeatureSet
        Sorted by clip id, so input order does not matter.
    errors : list of dict
        ``{"clip": ..., "error": ...}`` records, also sorted.
    """
    config = config or AnalysisConfig()
    fcfg = config.features()
    cache = {}
    results, errors = [], []
    for p in sorted(Path(p) for p in paths):
        clip_id = p.stem
        try:
            clip = read_wav(p, _manifest_label(p, cache))
            results.append(extract_features(clip, fcfg, clip_id))
        except (OSError, ValueError, FeatureError) as exc:
            errors.append({"clip": clip_id, "error": f"{type(exc).__name__}: {exc}"})
    results.sort(key=lambda f: f.clip_id)
    errors.sort(key=lambda e: e["clip"])
    return results, errors


def feature_rows(feature_sets):
    return [r for fs in sorted(feature_sets, key=lambda f: f.clip_id) for r in fs.rows()]


def _cell(v):
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return ""
        return f"{float(v):.10g}"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return v


def write_rows(rows, path, columns, fmt="csv"):
    """Write dict rows as CSV (header always present) or as a JSON document."""
    path = Path(path)
    if fmt == "json":
        clean = [{k: _json_value(r.get(k, "")) for k in columns} for r in rows]
        path.write_text(json.dumps({"columns": list(columns), "rows": clean}, indent=1) + "\n")
        return path
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(r.get(k, "")) for k in columns})
    return path


def _json_value(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return None if math.isnan(v) or math.isinf(v) else v
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def read_table(path):
    """Read a CSV or JSON table written by :func:`write_rows` into dict rows."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        doc = json.loads(text)
        return [{k: ("" if v is None else v) for k, v in r.items()} for r in doc["rows"]]
    return list(csv.DictReader(text.splitlines()))


# ------------------------------------------------------------ Table 1 view

TABLE1_COLUMNS = ("tabla_id", "subband", "f_low", "f_high", "sd", "mean")


def table1_from_features(feature_sets, plan=None, levels=(7, 6, 5, 4, 3)):
    """Per-tabla, per-band mean and sd of detected harmonic frequencies.

    All harmonics found in a band, pooled over a tabla's strokes, enter the
    mean and sd.  Sub-band numbers count upwards from the lowest analysed
    level; a band with fewer than two harmonics gets blank cells.
    """
    plan = plan or BandPlan()
    values = {}
    tablas = set()
    for fs in feature_sets:
        if fs.label is None:
            continue
        tablas.add(fs.label.tabla_id)
        for h in fs.harmonics:
            values.setdefault((fs.label.tabla_id, h.band_level), []).append(h.frequency)
    out = []
    for t in sorted(tablas):
        for sub, lev in enumerate(levels, start=1):
            lo, hi = plan.edges(lev)
            v = np.asarray(values.get((t, lev), []))
            mean = float(v.mean()) if v.size > 1 else None
            sd = float(v.std(ddof=1)) if v.size > 1 else None
            out.append({"tabla_id": t, "subband": sub, "f_low": lo, "f_high": hi, "sd": sd, "mean": mean})
    return out


# ------------------------------------------------------------------ stats

def _table_kind(columns):
    cols = set(columns)
    if {"subband", "sd", "mean", "tabla_id"} <= cols:
        return "table1"
    if {"group_label", "value"} <= cols:
        return "long"
    if {"band_level", "row_id"} <= cols:
        return "features"
    return "generic"


def groups_from_rows(rows, group_by, measure):
    """Build grouped samples from any supported table layout.

    Table-1 layouts accept ``measure`` in ``cv``, ``mean``, ``sd`` and
    ``group_by`` in ``subband``/``tabla``.  Feature tables use band rows for
    per-band measures and global rows for the timing measures.
    """
    if not rows:
        raise ValueError("table is empty")
    kind = _table_kind(rows[0].keys())
    if kind == "table1":
        recs = [{
            "tabla_id": int(r["tabla_id"]), "subband": int(r["subband"]),
            "f_low": float(r["f_low"]), "f_high": float(r["f_high"]),
            "sd": float(r["sd"]) if r["sd"] not in ("", None) else None,
            "mean": float(r["mean"]) if r["mean"] not in ("", None) else None,
        } for r in rows]
        by = "tabla" if group_by in ("tabla", "tabla_id") else group_by
        if by not in ("subband", "tabla"):
            raise ValueError(f"group-by must be subband or tabla for this table, got {group_by!r}")
        return st.table1_groups(measure, by, recs)
    if kind == "long" and group_by is None:
        group_by, measure = "group_label", "value"
    for col in (group_by, measure):
        if col not in rows[0]:
            raise ValueError(f"table has no column {col!r}")
    if kind == "features":
        want_global = measure in GLOBAL_ONLY or group_by in GLOBAL_ONLY
        rows = [r for r in rows if (r["band_level"] == "global") == want_global]
    return st.grouped_from_records(rows, group_by, measure)


def run_stats(g, tests=ALL_TESTS):
    """Run the selected tests; each either yields rows or a skip reason.

    Returns
    -------
    dict
        ``{test_name: {"rows": [...], "columns": (...)}}`` or
        ``{test_name: {"skipped": reason}}``.
    """
    report = {}
    anova = None
    for name in ALL_TESTS:
        if name not in tests:
            continue
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                report[name] = _STAT_RUNNERS[name](g, anova)
            if name == "anova":
                anova = report[name].pop("_result")
            notes = [str(w.message) for w in caught]
            if notes:
                report[name]["notes"] = notes
        except (ValueError, ZeroDivisionError) as exc:
            report[name] = {"skipped": f"{type(exc).__name__}: {exc}"}
    return report


def _run_descriptives(g, _):
    cols = ("label", "n", "mean", "sd", "se", "ci95_low", "ci95_high", "min", "max")
    return {"columns": cols, "rows": [st.result_dict(r) for r in st.descriptives(g)]}


def _run_levene(g, _):
    r = st.levene_test(g)
    cols = ("statistic", "df1", "df2", "p_value", "p_display", "excluded")
    row = dict(st.result_dict(r), p_display=st.format_p(r.p_value), excluded=";".join(map(str, r.excluded)))
    return {"columns": cols, "rows": [row]}


def _run_anova(g, _):
    r = st.oneway_anova(g)
    cols = ("source", "sum_of_squares", "df", "mean_square", "f", "p_value", "p_display")
    rows = [
        {"source": "Between Groups", "sum_of_squares": r.ss_between, "df": r.df_between,
         "mean_square": r.ms_between, "f": r.f_statistic, "p_value": r.p_value,
         "p_display": st.format_p(r.p_value)},
        {"source": "Within Groups", "sum_of_squares": r.ss_within, "df": r.df_within,
         "mean_square": r.ms_within, "f": "", "p_value": "", "p_display": ""},
        {"source": "Total", "sum_of_squares": r.ss_between + r.ss_within,
         "df": r.df_between + r.df_within, "mean_square": "", "f": "", "p_value": "", "p_display": ""},
    ]
    return {"columns": cols, "rows": rows, "_result": r}


def _run_welch(g, _):
    r = st.welch_anova(g)
    cols = ("statistic", "df1", "df2", "p_value", "p_display", "excluded")
    row = dict(st.result_dict(r), p_display=st.format_p(r.p_value), excluded=";".join(map(str, r.excluded)))
    return {"columns": cols, "rows": [row]}


def _run_tukey(g, anova):
    comps = st.tukey_hsd(g, anova)
    cols = ("label_i", "label_j", "mean_difference", "std_error", "q_statistic", "p_value",
            "p_display", "ci95_low", "ci95_high", "significant_at_05", "star")
    rows = [dict(st.result_dict(c), p_display=st.format_p(c.p_value),
                 star="*" if c.significant_at_05 else "") for c in comps]
    return {"columns": cols, "rows": rows}


_STAT_RUNNERS = {
    "descriptives": _run_descriptives,
    "levene": _run_levene,
    "anova": _run_anova,
    "welch": _run_welch,
    "tukey": _run_tukey,
}


def write_stats_report(report, directory, fmt="csv", prefix="stats"):
    """One file per test plus a ``<prefix>_summary.json`` listing skips and notes."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    summary = {}
    written = []
    for name, entry in report.items():
        if "skipped" in entry:
            summary[name] = {"skipped": entry["skipped"]}
            continue
        path = directory / f"{prefix}_{name}.{fmt}"
        written.append(write_rows(entry["rows"], path, entry["columns"], fmt))
        summary[name] = {"file": path.name, "notes": entry.get("notes", [])}
    spath = directory / f"{prefix}_summary.json"
    spath.write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    written.append(spath)
    return written


# ------------------------------------------------------------- categorize

def _num(v):
    return None if v in ("", None) else float(v)


def categorize(rows):
    """Evaluate the categorization rules on feature-table rows.

    Every outcome lists the row ids whose cells fed the computed numbers.

    Rules
    -----
    a. small-diameter tablas have a greater mean harmonic count than large ones
    b. damped strokes, relative to free ones: more band 3-4 harmonics, a
       later attack peak, an earlier MPF occurrence and a shorter decay
    c. fraction of total band energy in levels 3-7
    """
    if not rows:
        raise ValueError("feature table is empty")
    need = {"row_id", "tabla_id", "damping", "band_level", "harmonic_count", "energy",
            "attack_peak_s", "decay_s", "mpf_time_s"}
    missing = need - set(rows[0])
    if missing:
        raise ValueError(f"feature table lacks columns {sorted(missing)}")
    glob = [r for r in rows if r["band_level"] == "global"]
    band = [r for r in rows if r["band_level"] != "global"]

    # (a) harmonic counts per tabla size class
    per_size = {"small": [], "large": []}
    ids_a = {"small": [], "large": []}
    per_tabla = {}
    for r in glob:
        t = int(r["tabla_id"])
        size = "small" if is_small(t) else "large"
        per_size[size].append(float(r["harmonic_count"]))
        ids_a[size].append(r["row_id"])
        per_tabla.setdefault(t, []).append(float(r["harmonic_count"]))
    mean_small = _mean(per_size["small"])
    mean_large = _mean(per_size["large"])
    rule_a = {
        "rule": "a",
        "statement": "small-diameter tablas produce more harmonics than large-diameter tablas",
        "mean_harmonic_count_small": mean_small,
        "mean_harmonic_count_large": mean_large,
        "n_small": len(per_size["small"]),
        "n_large": len(per_size["large"]),
        "holds": _gt(mean_small, mean_large),
        "sources": ids_a["small"] + ids_a["large"],
    }

    # (b) damped/free indicators
    by_clip = {r["clip"]: r for r in glob}
    hb34 = {}
    hb34_ids = {}
    for r in band:
        if int(r["band_level"]) in (3, 4):
            hb34[r["clip"]] = hb34.get(r["clip"], 0.0) + float(r["harmonic_count"])
            hb34_ids.setdefault(r["clip"], []).append(r["row_id"])
    ind = {}
    for cls in ("damped", "free"):
        clips = sorted(c for c, r in by_clip.items() if r["damping"] == cls)
        ind[cls] = {
            "n": len(clips),
            "band34_harmonics": _mean([hb34.get(c, 0.0) for c in clips]),
            "attack_peak_s": _mean([_num(by_clip[c]["attack_peak_s"]) for c in clips]),
            "mpf_time_s": _mean([_num(by_clip[c]["mpf_time_s"]) for c in clips]),
            "decay_s": _mean([_num(by_clip[c]["decay_s"]) for c in clips]),
            "sources": [by_clip[c]["row_id"] for c in clips] + [i for c in clips for i in hb34_ids.get(c, [])],
        }
    d, f = ind["damped"], ind["free"]
    checks = {
        "more_band34_harmonics": _gt(d["band34_harmonics"], f["band34_harmonics"]),
        "later_attack_peak": _gt(d["attack_peak_s"], f["attack_peak_s"]),
        "earlier_mpf_time": _gt(f["mpf_time_s"], d["mpf_time_s"]),
        "shorter_decay": _gt(f["decay_s"], d["decay_s"]),
    }
    rule_b = {
        "rule": "b",
        "statement": "damped strokes show more band 3-4 harmonics, a later attack peak, "
                     "an earlier MPF occurrence and a shorter decay than free strokes",
        "damped": {k: v for k, v in d.items() if k != "sources"},
        "free": {k: v for k, v in f.items() if k != "sources"},
        "checks": checks,
        "holds": all(v is True for v in checks.values()),
        "sources": d["sources"] + f["sources"],
    }

    # (c) energy concentration
    e_total = sum(float(r["energy"]) for r in band)
    e_mid = sum(float(r["energy"]) for r in band if 3 <= int(r["band_level"]) <= 7)
    frac = e_mid / e_total if e_total > 0 else None
    rule_c = {
        "rule": "c",
        "statement": "information lies within levels 3 to 7",
        "energy_levels_3_7": e_mid,
        "energy_total": e_total,
        "fraction": frac,
        "holds": frac is not None and frac >= 0.99,
        "sources": [r["row_id"] for r in band],
    }

    tabla_summary = []
    for t in sorted(per_tabla):
        counts = {}
        for r in band:
            if int(r["tabla_id"]) == t:
                lev = int(r["band_level"])
                counts[lev] = counts.get(lev, 0.0) + float(r["harmonic_count"])
        tabla_summary.append({
            "tabla_id": t,
            "diameter_in": TABLA_DIAMETERS.get(t),
            "mean_harmonic_count": _mean(per_tabla[t]),
            "harmonic_count_by_level": {str(k): counts[k] for k in sorted(counts)},
        })
    stroke_summary = []
    for c in sorted(by_clip):
        r = by_clip[c]
        stroke_summary.append({
            "row_id": r["row_id"], "stroke": r.get("stroke", ""), "tabla_id": r["tabla_id"],
            "damping": r["damping"], "attack_peak_s": _num(r["attack_peak_s"]),
            "decay_s": _num(r["decay_s"]), "mpf_time_s": _num(r["mpf_time_s"]),
            "harmonic_count": float(r["harmonic_count"]), "band34_harmonics": hb34.get(c, 0.0),
        })
    return {"rules": [rule_a, rule_b, rule_c], "tablas": tabla_summary, "strokes": stroke_summary}


def attach_cv_profile(report, table1_rows):
    """Add each tabla's CV-by-band profile (with Table-1 row references)."""
    for entry in report["tablas"]:
        prof = []
        for r in table1_rows:
            if int(r["tabla_id"]) == entry["tabla_id"] and r["sd"] not in (None, "") and r["mean"] not in (None, ""):
                prof.append({"subband": int(r["subband"]),
                             "cv": st.coefficient_of_variation(float(r["sd"]), float(r["mean"])),
                             "source": f"table1:t{entry['tabla_id']}:s{int(r['subband'])}"})
        entry["cv_profile"] = prof
    return report


def _mean(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def _gt(a, b):
    if a is None or b is None:
        return None
    return bool(a > b)


# --------------------------------------------------------------- plotdata

SERIES_COLUMNS = ("band_level", "tabla_id", "value")


def plot_series(rows, measure, levels=(3, 4, 5, 6, 7)):
    """Per (band, tabla) mean of ``measure`` over strokes, as long-format rows."""
    acc = {}
    for r in rows:
        if r["band_level"] == "global" or r.get(measure) in ("", None):
            continue
        lev = int(r["band_level"])
        if lev not in levels:
            continue
        acc.setdefault((lev, int(r["tabla_id"])), []).append(float(r[measure]))
    return [{"band_level": lev, "tabla_id": t, "value": float(np.mean(v))}
            for (lev, t), v in sorted(acc.items(), key=lambda kv: (kv[0][1], kv[0][0]))]


HEATMAP_COLUMNS = ("scale_s", "frequency_hz", "time_s", "power", "in_coi")


def scalogram_heatmap_rows(scal, time_stride=1, scale_stride=1):
    rows = []
    valid = scal.valid
    for j in range(0, scal.scales.size, scale_stride):
        for i in range(0, scal.power.shape[1], time_stride):
            rows.append({"scale_s": float(scal.scales[j]), "frequency_hz": float(scal.frequencies[j]),
                         "time_s": i * scal.dt, "power": float(scal.power[j, i]),
                         "in_coi": not bool(valid[j, i])})
    return rows


def clip_scalogram(clip, config=None, f_low=110.0, f_high=3520.0):
    config = config or AnalysisConfig()
    spec = WaveletSpec.for_band(f_high, f_low, config.wavelet_dj, config.wavelet_omega0)
    return cwt_transform(clip, spec)


def ensure_dir(path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise ConfigError(f"output directory {path} is not writable")
    return path
