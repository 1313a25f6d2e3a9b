"""Synthetic event/report generator matching target corpus marginals.

Only the event total and the number of counties with activity are treated as
ground truth; per-county mass follows a Zipf law over a shuffled county order
and report text is drawn from per-type word distributions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .ingest import Gazetteer, GeoEvent, bundled_gazetteer


@dataclass(frozen=True)
class SynthProfile:
    total: int
    years: tuple[int, int]
    n_counties: int
    n_types: int
    zipf_exponent: float = 1.0
    doc_len_mean: float = 40.0
    n_vocab: int | None = None
    year_weights: tuple[float, ...] | None = None  # one weight per year, default uniform

    @classmethod
    def from_json(cls, data: bytes | str) -> "SynthProfile":
        obj = json.loads(data)
        return cls(
            total=int(obj["total"]),
            years=(int(obj["years"][0]), int(obj["years"][1])),
            n_counties=int(obj["n_counties"]),
            n_types=int(obj["n_types"]),
            zipf_exponent=float(obj.get("zipf_exponent", 1.0)),
            doc_len_mean=float(obj.get("doc_len_mean", 40.0)),
            n_vocab=int(obj["n_vocab"]) if "n_vocab" in obj else None,
            year_weights=tuple(obj["year_weights"]) if "year_weights" in obj else None,
        )


def _validate(profile: SynthProfile, gaz: Gazetteer) -> None:
    if profile.total < 1:
        raise ValueError("total must be >= 1")
    if profile.n_counties < 1 or profile.n_counties > len(gaz):
        raise ValueError(f"n_counties must be in 1..{len(gaz)} (gazetteer size)")
    if profile.total < profile.n_counties:
        raise ValueError("total must be >= n_counties so every county gets at least one event")
    if profile.n_types < 1:
        raise ValueError("n_types must be >= 1")
    if profile.years[0] > profile.years[1]:
        raise ValueError("year range reversed")
    n_years = profile.years[1] - profile.years[0] + 1
    if profile.year_weights is not None and len(profile.year_weights) != n_years:
        raise ValueError("year_weights length must match the year range")


def synth_events(profile: SynthProfile, seed: int, gazetteer: Gazetteer | None = None) -> list[GeoEvent]:
    """Generate exactly profile.total events spanning exactly profile.n_counties
    counties; deterministic given (profile, seed)."""
    gaz = gazetteer if gazetteer is not None else bundled_gazetteer()
    _validate(profile, gaz)
    rng = np.random.default_rng(seed)

    # Zipf county mass over a shuffled order; one guaranteed event per county.
    all_fips = sorted(gaz.by_fips)
    chosen = [all_fips[i] for i in rng.permutation(len(all_fips))[: profile.n_counties]]
    ranks = np.arange(1, profile.n_counties + 1, dtype=np.float64)
    weights = ranks ** (-profile.zipf_exponent)
    weights /= weights.sum()
    extra = rng.multinomial(profile.total - profile.n_counties, weights)
    county_of_event = np.repeat(np.arange(profile.n_counties), extra + 1)
    rng.shuffle(county_of_event)

    years = np.arange(profile.years[0], profile.years[1] + 1)
    yw = np.asarray(profile.year_weights, dtype=np.float64) if profile.year_weights else np.ones(len(years))
    yw = yw / yw.sum()
    event_years = rng.choice(years, size=profile.total, p=yw)

    n_vocab = profile.n_vocab if profile.n_vocab is not None else max(60, 20 * profile.n_types)
    lexicon = [f"term{i:03d}" for i in range(n_vocab)]
    type_dists = rng.dirichlet(np.full(n_vocab, 0.1), size=profile.n_types)
    event_types = rng.integers(0, profile.n_types, size=profile.total)

    events: list[GeoEvent] = []
    for i in range(profile.total):
        entry = gaz.by_fips[chosen[county_of_event[i]]]
        year = int(event_years[i])
        day0 = date(year, 1, 1)
        n_days = (date(year + 1, 1, 1) - day0).days
        when = day0 + timedelta(days=int(rng.integers(0, n_days)))
        t = int(event_types[i])
        length = max(1, int(rng.poisson(profile.doc_len_mean)))
        tokens = rng.choice(n_vocab, size=length, p=type_dists[t])
        events.append(
            GeoEvent(
                id=f"s{i + 1:06d}",
                date=when,
                state=entry.state,
                county_name=entry.county_name,
                address=None,
                event_type=f"type-{t:02d}",
                report_text=" ".join(lexicon[j] for j in tokens),
                fips=entry.fips,
                lat=entry.lat,
                lon=entry.lon,
            )
        )
    return events
