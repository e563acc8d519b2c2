"""One-way categorization statistics.

Descriptives with 95% confidence intervals, coefficient of variation,
Levene's homogeneity test (mean-centred), classical one-way ANOVA, Welch's
heteroscedastic ANOVA and Tukey-Kramer HSD post-hoc comparisons.  The
p-values come from :mod:`tablawave.special`.
"""

import csv
import io
import itertools
import math
import warnings
from dataclasses import asdict, dataclass
from importlib import resources

import numpy as np

from .special import f_sf, studentized_range_ppf, studentized_range_sf, t_ppf

__all__ = [
    "GroupedSamples",
    "DescriptivesRow",
    "AnovaResult",
    "LeveneResult",
    "WelchResult",
    "TukeyComparison",
    "descriptives",
    "coefficient_of_variation",
    "levene_test",
    "oneway_anova",
    "welch_anova",
    "tukey_hsd",
    "format_p",
    "load_table1",
    "table1_groups",
    "read_long_csv",
]


class DegenerateDataError(ValueError):
    """The data admit no finite test statistic (e.g. zero within-group variance)."""


def _label_key(label):
    try:
        return (0, float(label), "")
    except (TypeError, ValueError):
        return (1, 0.0, str(label))


@dataclass(frozen=True)
class GroupedSamples:
    """Labelled numeric groups, the input to every test in this module."""

    groups: tuple

    def __init__(self, groups):
        if isinstance(groups, dict):
            groups = groups.items()
        cleaned = []
        for label, values in groups:
            arr = np.asarray(values, dtype=float).ravel()
            if arr.size < 1:
                raise ValueError(f"group {label!r} is empty")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"group {label!r} contains non-finite values")
            cleaned.append((label, arr))
        if len(cleaned) < 2:
            raise ValueError("at least two groups are required")
        object.__setattr__(self, "groups", tuple(cleaned))

    @property
    def labels(self):
        return [label for label, _ in self.groups]

    @property
    def arrays(self):
        return [arr for _, arr in self.groups]

    @property
    def sizes(self):
        return np.array([arr.size for arr in self.arrays])

    @property
    def k(self):
        return len(self.groups)

    @property
    def n_total(self):
        return int(self.sizes.sum())

    def map(self, func):
        """Apply ``func`` to every value array, keeping labels."""
        return GroupedSamples([(label, func(arr)) for label, arr in self.groups])

    def subset(self, keep):
        return GroupedSamples([(label, arr) for label, arr in self.groups if keep(label, arr)])


@dataclass(frozen=True)
class DescriptivesRow:
    label: object
    n: int
    mean: float
    sd: float
    se: float
    ci95_low: float
    ci95_high: float
    min: float
    max: float


@dataclass(frozen=True)
class AnovaResult:
    f_statistic: float
    df_between: int
    df_within: int
    p_value: float
    ss_between: float
    ss_within: float
    ms_between: float
    ms_within: float
    degenerate: bool = False


@dataclass(frozen=True)
class LeveneResult:
    statistic: float
    df1: int
    df2: int
    p_value: float
    excluded: tuple = ()


@dataclass(frozen=True)
class WelchResult:
    statistic: float
    df1: float
    df2: float
    p_value: float
    excluded: tuple = ()


@dataclass(frozen=True)
class TukeyComparison:
    label_i: object
    label_j: object
    mean_difference: float
    std_error: float
    q_statistic: float
    p_value: float
    ci95_low: float
    ci95_high: float
    significant_at_05: bool


def descriptives(g, confidence=0.95):
    """Per-group and pooled descriptives.

    Returns a list of :class:`DescriptivesRow`, one per group followed by a
    ``"Total"`` row.  ``sd`` uses the ``n - 1`` denominator; groups of size
    one get ``nan`` for sd, se and the confidence limits.
    """
    rows = []
    pooled = np.concatenate(g.arrays)
    for label, arr in list(g.groups) + [("Total", pooled)]:
        n = arr.size
        mean = float(arr.mean())
        if n > 1:
            sd = float(arr.std(ddof=1))
            se = sd / math.sqrt(n)
            half = t_ppf(0.5 + confidence / 2.0, n - 1) * se
            lo, hi = mean - half, mean + half
        else:
            sd = se = lo = hi = float("nan")
        rows.append(DescriptivesRow(label, n, mean, sd, se, lo, hi, float(arr.min()), float(arr.max())))
    return rows


def coefficient_of_variation(sd, mean):
    """Coefficient of variation in percent, ``100 * sd / mean``."""
    if mean == 0:
        raise ZeroDivisionError("coefficient of variation undefined for zero mean")
    return 100.0 * sd / mean


def oneway_anova(g):
    """Classical one-way ANOVA (between/within sums of squares)."""
    k, n = g.k, g.n_total
    if n <= k:
        raise ValueError("one-way ANOVA needs more observations than groups")
    grand = np.concatenate(g.arrays).mean()
    ss_between = float(sum(a.size * (a.mean() - grand) ** 2 for a in g.arrays))
    ss_within = float(sum(((a - a.mean()) ** 2).sum() for a in g.arrays))
    df_b, df_w = k - 1, n - k
    ms_b, ms_w = ss_between / df_b, ss_within / df_w
    if ms_w == 0.0:
        if ms_b == 0.0:
            raise DegenerateDataError("all observations are identical")
        return AnovaResult(math.inf, df_b, df_w, 0.0, ss_between, ss_within, ms_b, ms_w, degenerate=True)
    f = ms_b / ms_w
    return AnovaResult(f, df_b, df_w, f_sf(f, df_b, df_w), ss_between, ss_within, ms_b, ms_w)


def levene_test(g):
    """Levene's test for equal variances, centred on group means.

    Groups with a single observation carry no spread information and are
    dropped with a warning.
    """
    small = [label for label, arr in g.groups if arr.size < 2]
    if small:
        warnings.warn(f"Levene test: excluding groups of size 1: {small}", stacklevel=2)
        g = g.subset(lambda label, arr: arr.size >= 2)
    deviations = g.map(lambda a: np.abs(a - a.mean()))
    if all(np.all(a == 0) for a in deviations.arrays):
        raise DegenerateDataError("all absolute deviations are zero")
    res = oneway_anova(deviations)
    p = float("nan") if res.degenerate else res.p_value
    return LeveneResult(res.f_statistic, res.df_between, res.df_within, p, tuple(small))


def welch_anova(g):
    """Welch's one-way ANOVA for unequal variances.

    The denominator degrees of freedom are fractional.  Groups with zero
    variance would receive infinite weight and are excluded with a warning.
    """
    excluded = [label for label, arr in g.groups if arr.size < 2 or np.var(arr) == 0.0]
    if excluded:
        warnings.warn(f"Welch ANOVA: excluding groups of size 1 or zero variance: {excluded}", stacklevel=2)
        g = g.subset(lambda label, arr: arr.size >= 2 and np.var(arr) > 0.0)
    k = g.k
    n = g.sizes.astype(float)
    means = np.array([a.mean() for a in g.arrays])
    variances = np.array([a.var(ddof=1) for a in g.arrays])
    w = n / variances
    w_sum = w.sum()
    weighted_mean = (w * means).sum() / w_sum
    a = (w * (means - weighted_mean) ** 2).sum() / (k - 1)
    tmp = (((1.0 - w / w_sum) ** 2) / (n - 1.0)).sum()
    b = 1.0 + 2.0 * (k - 2.0) / (k * k - 1.0) * tmp
    stat = a / b
    df2 = (k * k - 1.0) / (3.0 * tmp)
    return WelchResult(float(stat), float(k - 1), float(df2), f_sf(stat, k - 1, df2), tuple(excluded))


def tukey_hsd(g, anova=None, alpha=0.05):
    """All-pairs Tukey-Kramer comparisons.

    Both orderings of every pair are returned (``k * (k - 1)`` rows), in the
    layout of a "Multiple Comparisons" table.  ``std_error`` is
    ``sqrt(MSW * (1/n_i + 1/n_j))``; the studentized statistic divides the
    mean difference by ``sqrt(MSW / 2 * (1/n_i + 1/n_j))``.
    """
    if anova is None:
        anova = oneway_anova(g)
    msw = anova.ms_within
    if msw == 0.0:
        raise DegenerateDataError("within-group mean square is zero")
    k, df = g.k, anova.df_within
    q_crit = studentized_range_ppf(1.0 - alpha, k, df)
    means = [a.mean() for a in g.arrays]
    sizes = g.sizes
    p_cache = {}
    out = []
    for i, j in itertools.permutations(range(k), 2):
        diff = float(means[i] - means[j])
        inv = 1.0 / sizes[i] + 1.0 / sizes[j]
        se = math.sqrt(msw * inv)
        scale = math.sqrt(msw / 2.0 * inv)
        q = abs(diff) / scale
        key = (min(i, j), max(i, j))
        if key not in p_cache:
            p_cache[key] = studentized_range_sf(q, k, df)
        half = q_crit * scale
        out.append(TukeyComparison(
            g.labels[i], g.labels[j], diff, se, q, p_cache[key],
            diff - half, diff + half, bool(q > q_crit),
        ))
    return out


def format_p(p):
    """Three-decimal display used in report tables (``0.000`` below 0.0005)."""
    if p is None or (isinstance(p, float) and math.isnan(p)):
        return ""
    return f"{p:.3f}"


def load_table1():
    """The bundled per-tabla, per-sub-band harmonic mean/sd table.

    Returns a list of dicts with keys ``tabla_id, subband, f_low, f_high,
    sd, mean``; blank cells come back as ``None``.
    """
    text = resources.files("tablawave").joinpath("data/table1.csv").read_text()
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append({
            "tabla_id": int(rec["tabla_id"]),
            "subband": int(rec["subband"]),
            "f_low": float(rec["f_low"]),
            "f_high": float(rec["f_high"]),
            "sd": float(rec["sd"]) if rec["sd"] else None,
            "mean": float(rec["mean"]) if rec["mean"] else None,
        })
    return rows


def table1_groups(measure, by="subband", rows=None):
    """Group a Table-1-style dataset for analysis.

    Parameters
    ----------
    measure : {"cv", "mean", "sd"}
    by : {"subband", "tabla"}
    rows : list of dict, optional
        Defaults to :func:`load_table1`.
    """
    if rows is None:
        rows = load_table1()
    key = {"subband": "subband", "tabla": "tabla_id"}[by]
    groups = {}
    for r in rows:
        if r["mean"] is None or r["sd"] is None:
            continue
        if measure == "cv":
            value = coefficient_of_variation(r["sd"], r["mean"])
        elif measure in ("mean", "sd"):
            value = r[measure]
        else:
            raise ValueError(f"unknown measure {measure!r}")
        groups.setdefault(r[key], []).append(value)
    return GroupedSamples(sorted(groups.items(), key=lambda kv: _label_key(kv[0])))


def grouped_from_records(records, group_by, measure):
    """Build :class:`GroupedSamples` from dict records, skipping blank cells."""
    groups = {}
    for rec in records:
        value = rec.get(measure)
        if value in (None, ""):
            continue
        value = float(value)
        if math.isnan(value):
            continue
        groups.setdefault(rec[group_by], []).append(value)
    return GroupedSamples(sorted(groups.items(), key=lambda kv: _label_key(kv[0])))


def read_long_csv(path, group_col="group_label", value_col="value"):
    """Read long-format ``(group_label, value)`` CSV into :class:`GroupedSamples`."""
    with open(path, newline="") as fh:
        return grouped_from_records(csv.DictReader(fh), group_col, value_col)


def result_dict(obj):
    """Plain-dict view of a result dataclass (for JSON output)."""
    return asdict(obj)
