from datetime import date
from pathlib import Path

import numpy as np
import pytest

from eventmap.corpus import Corpus, Document, Vocabulary, days_since_epoch
from eventmap.ingest import GeoEvent, bundled_gazetteer

REPO_ROOT = Path(__file__).resolve().parents[1]
TABLE1_PATH = REPO_ROOT / "fixtures" / "table1.csv"


@pytest.fixture(scope="session")
def gazetteer():
    return bundled_gazetteer()


@pytest.fixture(scope="session")
def event_factory(gazetteer):
    def make(event_id: str, iso_date: str, fips: str = "20161", event_type: str = "lab-seizure",
             text: str = "tanks and equipment seized") -> GeoEvent:
        entry = gazetteer.by_fips[fips]
        return GeoEvent(
            id=event_id,
            date=date.fromisoformat(iso_date),
            state=entry.state,
            county_name=entry.county_name,
            address=None,
            event_type=event_type,
            report_text=text,
            fips=entry.fips,
            lat=entry.lat,
            lon=entry.lon,
        )

    return make


def make_corpus(token_texts: list[list[str]], dates: list[date] | None = None,
                fips: list[str] | None = None) -> Corpus:
    """Corpus straight from pre-tokenized word lists (vocabulary in first-seen
    order by descending frequency, matching build_vocabulary)."""
    from eventmap.corpus import build_vocabulary

    vocab = build_vocabulary(token_texts, min_count=1)
    docs = []
    for i, toks in enumerate(token_texts):
        d = dates[i] if dates else date(2010, 1, 15)
        docs.append(
            Document(
                tokens=np.array([vocab.index[t] for t in toks], dtype=np.int32),
                timestamp=days_since_epoch(d),
                event_id=f"doc-{i}",
                fips=fips[i] if fips else "20161",
                year=d.year,
            )
        )
    return Corpus(vocabulary=vocab, documents=docs)
