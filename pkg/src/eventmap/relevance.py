"""Decision artifacts over per-report topic mixtures: county-year proportion
tables, threshold marks, location-time posteriors, and frequency filters."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTopicError, UnknownTopicError
from .ingest import GeoEvent


@dataclass(frozen=True)
class CellStat:
    proportion: float  # mean topic proportion over the cell's reports
    n_reports: int


@dataclass
class ProportionTable:
    """(fips, year, topic) -> mean topic proportion with per-cell report count."""

    cells: dict[tuple[str, int, str], CellStat] = field(default_factory=dict)

    @property
    def topics(self) -> set[str]:
        return {t for (_, _, t) in self.cells}

    @property
    def keys(self) -> set[tuple[str, int]]:
        return {(f, y) for (f, y, _) in self.cells}

    def proportion(self, fips: str, year: int, topic: str) -> float | None:
        cell = self.cells.get((fips, year, topic))
        return cell.proportion if cell else None


MarkSet = set  # of (fips, year) pairs


def build_table(theta: np.ndarray, events: list[GeoEvent], topic_labels: list[str] | None = None) -> ProportionTable:
    """Average each report's mixture into its (county, year) cell. theta rows
    align positionally with events."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim != 2 or theta.shape[0] != len(events):
        raise ValueError("theta rows must align 1:1 with events")
    k = theta.shape[1]
    labels = topic_labels if topic_labels is not None else [str(i) for i in range(k)]
    if len(labels) != k:
        raise ValueError("one label per topic required")
    sums: dict[tuple[str, int], np.ndarray] = {}
    counts: dict[tuple[str, int], int] = {}
    for row, ev in zip(theta, events):
        key = (ev.fips, ev.date.year)
        if key in sums:
            sums[key] = sums[key] + row
            counts[key] += 1
        else:
            sums[key] = row.copy()
            counts[key] = 1
    table = ProportionTable()
    for key, vec in sums.items():
        n = counts[key]
        for i, label in enumerate(labels):
            table.cells[(key[0], key[1], label)] = CellStat(proportion=float(vec[i]) / n, n_reports=n)
    return table


def mark_events(table: ProportionTable, topic: str, threshold: float, year: int) -> MarkSet:
    """Counties whose mean proportion for the topic strictly exceeds the
    threshold in the given year."""
    if not (0.0 <= threshold <= 1.0):
        raise ValueError("threshold must be within [0, 1]")
    if topic not in table.topics:
        raise UnknownTopicError(f"topic {topic!r} not in table")
    marks: MarkSet = set()
    for (fips, y, t), cell in table.cells.items():
        if t == topic and y == year and cell.proportion > threshold:
            marks.add((fips, y))
    return marks


def location_time_posterior(
    theta: np.ndarray,
    events: list[GeoEvent],
    topic: int,
    bucket: str = "year",
) -> dict[tuple[str, str], float]:
    """p(county, time bucket | topic) as the topic's theta mass share per cell."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape[0] != len(events):
        raise ValueError("theta rows must align 1:1 with events")
    if bucket not in ("year", "month"):
        raise ValueError("bucket must be 'year' or 'month'")
    if not (0 <= topic < theta.shape[1]):
        raise UnknownTopicError(f"topic index {topic} out of range")
    mass: dict[tuple[str, str], float] = {}
    for row, ev in zip(theta, events):
        label = str(ev.date.year) if bucket == "year" else f"{ev.date.year:04d}-{ev.date.month:02d}"
        key = (ev.fips, label)
        mass[key] = mass.get(key, 0.0) + float(row[topic])
    total = sum(mass.values())
    if total <= 0.0:
        raise DegenerateTopicError(f"topic {topic} carries zero mass")
    return {key: v / total for key, v in mass.items()}


def frequency_filter(
    source,
    lo: float,
    hi: float = math.inf,
    metric: str = "count",
    topic: str | None = None,
) -> set[str]:
    """Regions whose aggregate metric lies in the inclusive range [lo, hi].

    metric "count" expects a fips -> count mapping; metric "topic_prop"
    expects a ProportionTable plus a topic and uses the per-region mean
    proportion (report-weighted across years).
    """
    if lo > hi:
        raise ValueError("lo must be <= hi")
    values: dict[str, float]
    if metric == "count":
        values = {str(f): float(c) for f, c in dict(source).items()}
    elif metric == "topic_prop":
        if not isinstance(source, ProportionTable) or topic is None:
            raise ValueError("topic_prop filtering needs a ProportionTable and a topic")
        if topic not in source.topics:
            raise UnknownTopicError(f"topic {topic!r} not in table")
        sums: dict[str, float] = {}
        weights: dict[str, int] = {}
        for (fips, _, t), cell in source.cells.items():
            if t != topic:
                continue
            sums[fips] = sums.get(fips, 0.0) + cell.proportion * cell.n_reports
            weights[fips] = weights.get(fips, 0) + cell.n_reports
        values = {f: sums[f] / weights[f] for f in sums}
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return {f for f, v in values.items() if lo <= v <= hi}


def save_table(table: ProportionTable) -> bytes:
    """Deterministic CSV (fips,year,topic,proportion,n_reports) sorted by key."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["fips", "year", "topic", "proportion", "n_reports"])
    for (fips, year, topic) in sorted(table.cells):
        cell = table.cells[(fips, year, topic)]
        writer.writerow([fips, year, topic, repr(cell.proportion), cell.n_reports])
    return buf.getvalue().encode("utf-8")


def load_table(data: bytes) -> ProportionTable:
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    header = next(reader)
    required = ["fips", "year", "topic", "proportion", "n_reports"]
    if [c for c in required if c not in header]:
        raise ValueError("table csv missing required columns")
    idx = {c: header.index(c) for c in required}
    table = ProportionTable()
    for row in reader:
        if not row:
            continue
        table.cells[(row[idx["fips"]], int(row[idx["year"]]), row[idx["topic"]])] = CellStat(
            proportion=float(row[idx["proportion"]]), n_reports=int(row[idx["n_reports"]])
        )
    return table
