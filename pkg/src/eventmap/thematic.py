"""Choropleth aggregation, class breaks, palettes, and dual-scale time series."""

from __future__ import annotations

import json
from bisect import bisect_left
from dataclasses import dataclass

from .ingest import GeoEvent
from .relevance import ProportionTable
from .errors import UnknownTopicError

# Each ramp is (light, mid, dark) anchors; colors are sampled piecewise
# linearly with the midpoint pinned, darkest = highest class.
RAMPS: dict[str, tuple[str, str, str]] = {
    "grayscale": ("#EEEEEE", "#777777", "#222222"),
    "sequential_red": ("#FEE5D9", "#FB6A4A", "#99000D"),
    "sequential_blue": ("#EFF3FF", "#6BAED6", "#08519C"),
}


@dataclass
class ChoroplethLayer:
    metric: str
    scheme: str
    breaks: tuple[float, ...]  # strictly ascending interior breaks
    colors: tuple[str, ...]  # one per class (= len(breaks) + 1)
    values: dict[str, float]  # fips -> value; absent regions = no data
    scope: str = "all"

    def class_of(self, value: float) -> int:
        """Class index with upper-inclusive bounds; the max value lands in the
        last class."""
        return bisect_left(self.breaks, value)

    def color_of(self, value: float) -> str:
        return self.colors[self.class_of(value)]

    def to_json(self) -> bytes:
        payload = {
            "metric": self.metric,
            "scheme": self.scheme,
            "breaks": list(self.breaks),
            "colors": list(self.colors),
            "values": {f: self.values[f] for f in sorted(self.values)},
        }
        return json.dumps(payload, separators=(",", ":")).encode("utf-8")


@dataclass
class TimeSeries:
    scale: str  # "monthly" | "yearly"
    series: list[tuple[str, int]]  # contiguous (bucket label, count)
    fips: str | None = None

    @property
    def total(self) -> int:
        return sum(c for _, c in self.series)


def aggregate_counts(events: list[GeoEvent], year: int | None = None) -> dict[str, float]:
    """Event count per county, optionally restricted to one calendar year."""
    out: dict[str, float] = {}
    for ev in events:
        if year is not None and ev.date.year != year:
            continue
        out[ev.fips] = out.get(ev.fips, 0.0) + 1.0
    return out


def aggregate_topic_prop(table: ProportionTable, topic: str, year: int | None = None) -> dict[str, float]:
    """Mean topic proportion per county from a ProportionTable (report-weighted
    across years when no year is given)."""
    if topic not in table.topics:
        raise UnknownTopicError(f"topic {topic!r} not in table")
    sums: dict[str, float] = {}
    weights: dict[str, int] = {}
    for (fips, y, t), cell in table.cells.items():
        if t != topic or (year is not None and y != year):
            continue
        sums[fips] = sums.get(fips, 0.0) + cell.proportion * cell.n_reports
        weights[fips] = weights.get(fips, 0) + cell.n_reports
    return {f: sums[f] / weights[f] for f in sums}


def aggregate_choropleth(
    metric: str,
    events: list[GeoEvent] | None = None,
    table: ProportionTable | None = None,
    topic: str | None = None,
    year: int | None = None,
) -> dict[str, float]:
    if metric == "count":
        if events is None:
            raise ValueError("count metric needs events")
        return aggregate_counts(events, year)
    if metric == "topic_prop":
        if table is None or topic is None:
            raise ValueError("topic_prop metric needs a ProportionTable and a topic")
        return aggregate_topic_prop(table, topic, year)
    raise ValueError(f"unknown metric {metric!r}")


def classify_breaks(values, scheme: str = "quantile", n_classes: int = 5) -> tuple[float, ...]:
    """Interior class breaks (ascending). n_classes is capped at the number of
    distinct values; quantiles use the nearest-rank definition."""
    vals = sorted(float(v) for v in values)
    if not vals:
        raise ValueError("cannot classify an empty value set")
    if n_classes < 1:
        raise ValueError("n_classes must be >= 1")
    n_classes = min(n_classes, len(set(vals)))
    if n_classes == 1:
        return ()
    if scheme == "equal_interval":
        lo, hi = vals[0], vals[-1]
        breaks = tuple(lo + i * (hi - lo) / n_classes for i in range(1, n_classes))
    elif scheme == "quantile":
        n = len(vals)
        ranks = []
        for i in range(1, n_classes):
            r = max(1, -(-i * n // n_classes))  # ceil(i*n/n_classes), nearest-rank
            ranks.append(vals[r - 1])
        # collapse duplicate quantiles; a break at the max would empty the top class
        breaks = tuple(b for b in dict.fromkeys(ranks) if b < vals[-1])
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    if any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
        breaks = tuple(dict.fromkeys(breaks))
    return breaks


def _hex_to_rgb(color: str) -> tuple[int, int, int]:
    return tuple(int(color[i : i + 2], 16) for i in (1, 3, 5))


def _rgb_to_hex(rgb: tuple[float, float, float]) -> str:
    return "#%02X%02X%02X" % tuple(int(round(c)) for c in rgb)


def assign_palette(n_classes: int, ramp: str = "sequential_red") -> tuple[str, ...]:
    """Sample n colors from a 3-anchor ramp (light -> mid -> dark); a single
    class gets the ramp midpoint, two classes the endpoints."""
    if not (1 <= n_classes <= 9):
        raise ValueError("n_classes must be within 1..9")
    if ramp not in RAMPS:
        raise ValueError(f"unknown ramp {ramp!r}")
    light, mid, dark = (_hex_to_rgb(c) for c in RAMPS[ramp])
    colors = []
    for i in range(n_classes):
        p = 0.5 if n_classes == 1 else i / (n_classes - 1)
        if p <= 0.5:
            f = p / 0.5
            rgb = tuple(l + (m - l) * f for l, m in zip(light, mid))
        else:
            f = (p - 0.5) / 0.5
            rgb = tuple(m + (d - m) * f for m, d in zip(mid, dark))
        colors.append(_rgb_to_hex(rgb))
    return tuple(colors)


def build_layer(
    values: dict[str, float],
    metric: str = "count",
    scheme: str = "quantile",
    n_classes: int = 5,
    ramp: str = "sequential_red",
    scope: str = "all",
) -> ChoroplethLayer:
    breaks = classify_breaks(values.values(), scheme, n_classes)
    colors = assign_palette(len(breaks) + 1, ramp)
    return ChoroplethLayer(metric=metric, scheme=scheme, breaks=breaks, colors=colors, values=dict(values), scope=scope)


def timeline_series(events: list[GeoEvent], scale: str = "monthly", fips: str | None = None) -> TimeSeries:
    """Calendar bucketing with zero-count buckets filled between the first and
    last event; buckets are half-open [start, next-start)."""
    if scale not in ("monthly", "yearly"):
        raise ValueError("scale must be 'monthly' or 'yearly'")
    dates = sorted(ev.date for ev in events if fips is None or ev.fips == fips)
    if not dates:
        return TimeSeries(scale=scale, series=[], fips=fips)
    counts: dict[str, int] = {}
    for d in dates:
        label = f"{d.year:04d}" if scale == "yearly" else f"{d.year:04d}-{d.month:02d}"
        counts[label] = counts.get(label, 0) + 1
    series: list[tuple[str, int]] = []
    if scale == "yearly":
        for year in range(dates[0].year, dates[-1].year + 1):
            label = f"{year:04d}"
            series.append((label, counts.get(label, 0)))
    else:
        year, month = dates[0].year, dates[0].month
        while (year, month) <= (dates[-1].year, dates[-1].month):
            label = f"{year:04d}-{month:02d}"
            series.append((label, counts.get(label, 0)))
            month += 1
            if month == 13:
                year, month = year + 1, 1
    return TimeSeries(scale=scale, series=series, fips=fips)
