"""Append-only event store with in-memory indexes and a fitted-model registry.

The log (events.jsonl, one GeoEvent per line) is the source of truth;
indexes are rebuilt from it on open, so a crash between log append and index
update loses nothing. A single writer lease serializes ingestion and fits;
reads never block.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

from . import dyntopic, lda
from .corpus import corpus_from_events, load_stopwords
from .errors import FitBusyError, StoreError
from .ingest import GeoEvent, geoevent_from_json, geoevent_to_json


@dataclass
class IngestReport:
    appended: int
    duplicates: list[str] = field(default_factory=list)


@dataclass
class EventFilter:
    date_from: date | None = None
    date_to: date | None = None
    fips: str | None = None
    event_type: str | None = None
    topic: int | None = None
    min_prop: float | None = None
    model_id: str | None = None


@dataclass
class FitSpec:
    model: str  # "lda" | "cdtm"
    k: int
    seed: int = 0
    params: dict = field(default_factory=dict)
    min_count: int = 1
    stopwords_path: str | None = None


@dataclass
class LoadedModel:
    model_id: str
    kind: str
    model: object
    theta: np.ndarray
    labels: list[str]
    event_count: int


class CrashInjected(StoreError):
    """Raised by the test hook between log append and index update."""


class EventStore:
    def __init__(self, path: str | Path):
        self.dir = Path(path)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.dir / "events.jsonl"
        self.models_dir = self.dir / "models"
        self.models_dir.mkdir(exist_ok=True)
        self._write_lock = threading.Lock()
        self.crash_after_log = False  # test hook: simulate dying before index update
        self._reload()

    # -- log & indexes -----------------------------------------------------

    def _reload(self) -> None:
        events: list[GeoEvent] = []
        if self.log_path.exists():
            with open(self.log_path, encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if line:
                        events.append(geoevent_from_json(json.loads(line)))
        self.events = events
        self._rebuild_indexes()

    def _rebuild_indexes(self) -> None:
        self.by_id: dict[str, int] = {}
        self.by_fips: dict[str, list[int]] = {}
        self.by_month: dict[tuple[int, int], list[int]] = {}
        self.by_type: dict[str, list[int]] = {}
        for i, ev in enumerate(self.events):
            self._index_one(i, ev)

    def _index_one(self, i: int, ev: GeoEvent) -> None:
        self.by_id[ev.id] = i
        self.by_fips.setdefault(ev.fips, []).append(i)
        self.by_month.setdefault((ev.date.year, ev.date.month), []).append(i)
        self.by_type.setdefault(ev.event_type, []).append(i)

    def __len__(self) -> int:
        return len(self.events)

    def ingest(self, events: list[GeoEvent]) -> IngestReport:
        """Append georeferenced events; duplicate ids are rejected and listed,
        the rest commit atomically."""
        with self._write_lock:
            accepted: list[GeoEvent] = []
            duplicates: list[str] = []
            batch_ids: set[str] = set()
            for ev in events:
                if not ev.fips:
                    raise StoreError(f"event {ev.id!r} is not georeferenced")
                if ev.id in self.by_id or ev.id in batch_ids:
                    duplicates.append(ev.id)
                    continue
                batch_ids.add(ev.id)
                accepted.append(ev)
            if accepted:
                blob = "".join(
                    json.dumps(geoevent_to_json(ev), ensure_ascii=False) + "\n" for ev in accepted
                ).encode("utf-8")
                try:
                    with open(self.log_path, "ab") as f:
                        f.write(blob)
                        f.flush()
                        os.fsync(f.fileno())
                except OSError as exc:
                    self._reload()  # resync memory with whatever hit disk
                    raise StoreError(f"log append failed: {exc}") from exc
                if self.crash_after_log:
                    raise CrashInjected("crash injected between log write and index update")
                base = len(self.events)
                self.events.extend(accepted)
                for off, ev in enumerate(accepted):
                    self._index_one(base + off, ev)
            return IngestReport(appended=len(accepted), duplicates=duplicates)

    # -- queries -------------------------------------------------------------

    def query(self, flt: EventFilter) -> list[GeoEvent]:
        """Conjunctive filtering, sorted by (date, id)."""
        if flt.date_from and flt.date_to and flt.date_from > flt.date_to:
            raise ValueError("filter range reversed: from > to")
        if flt.fips is not None:
            positions = list(self.by_fips.get(flt.fips, []))
        elif flt.event_type is not None:
            positions = list(self.by_type.get(flt.event_type, []))
        else:
            positions = list(range(len(self.events)))
        theta = None
        if flt.topic is not None:
            if flt.min_prop is None:
                raise ValueError("topic filter needs min_prop")
            loaded = self.load_model(flt.model_id or self.latest_model_id())
            theta = loaded.theta
            if not (0 <= flt.topic < theta.shape[1]):
                raise ValueError(f"topic {flt.topic} out of range for model {loaded.model_id}")
        out = []
        for i in positions:
            ev = self.events[i]
            if flt.fips is not None and ev.fips != flt.fips:
                continue
            if flt.event_type is not None and ev.event_type != flt.event_type:
                continue
            if flt.date_from and ev.date < flt.date_from:
                continue
            if flt.date_to and ev.date > flt.date_to:
                continue
            if theta is not None:
                if i >= theta.shape[0] or theta[i, flt.topic] <= flt.min_prop:
                    continue
            out.append(ev)
        out.sort(key=lambda e: (e.date, e.id))
        return out

    # -- model registry ------------------------------------------------------

    def run_fit(self, spec: FitSpec) -> str:
        """Build a corpus from the stored events, fit, persist model + theta,
        return the model id. Only one fit (or ingest) runs at a time."""
        if not self._write_lock.acquire(blocking=False):
            raise FitBusyError("another mutation is in flight")
        try:
            if not self.events:
                raise StoreError("store is empty; nothing to fit")
            events = list(self.events)
            stopwords = load_stopwords(spec.stopwords_path)
            corpus = corpus_from_events(events, stopwords, spec.min_count)
            if spec.model == "lda":
                model, theta = lda.fit_gibbs(corpus, spec.k, seed=spec.seed, **spec.params)
                model_bytes = lda.model_to_json(model)
                labels = [model.top_words(i, 1)[0] for i in range(spec.k)]
            elif spec.model == "cdtm":
                epochs = dyntopic.group_by_month(corpus)
                model, var_state = dyntopic.fit_cdtm(epochs, spec.k, seed=spec.seed, **spec.params)
                theta = dyntopic.theta_matrix(var_state, epochs)
                model_bytes = dyntopic.model_to_json(model)
                labels = [model.top_words(i, n=1)[0] for i in range(spec.k)]
            else:
                raise ValueError(f"unknown model kind {spec.model!r}")
            model_id = f"{spec.model}-{len(self.list_models()) + 1:04d}"
            (self.models_dir / f"{model_id}.model.json").write_bytes(model_bytes)
            meta = {
                "id": model_id,
                "kind": spec.model,
                "k": spec.k,
                "seed": spec.seed,
                "event_count": len(events),
                "labels": labels,
                "vocab": list(corpus.vocabulary.words),
                "theta": theta.tolist(),
            }
            (self.models_dir / f"{model_id}.meta.json").write_text(
                json.dumps(meta, ensure_ascii=False), encoding="utf-8"
            )
            return model_id
        finally:
            self._write_lock.release()

    def list_models(self) -> list[str]:
        return sorted(p.name[: -len(".model.json")] for p in self.models_dir.glob("*.model.json"))

    def latest_model_id(self) -> str:
        models = self.list_models()
        if not models:
            raise StoreError("no fitted model in the store")
        return models[-1]

    def load_model(self, model_id: str) -> LoadedModel:
        meta_path = self.models_dir / f"{model_id}.meta.json"
        model_path = self.models_dir / f"{model_id}.model.json"
        if not meta_path.exists() or not model_path.exists():
            raise StoreError(f"model {model_id!r} not found")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        data = model_path.read_bytes()
        from .corpus import Vocabulary

        vocab = Vocabulary.from_words(list(meta["vocab"]))
        if meta["kind"] == "lda":
            model = lda.model_from_json(data)
            model.vocabulary = vocab
        else:
            model = dyntopic.model_from_json(data, vocabulary=vocab)
        return LoadedModel(
            model_id=model_id,
            kind=meta["kind"],
            model=model,
            theta=np.array(meta["theta"], dtype=np.float64),
            labels=list(meta["labels"]),
            event_count=int(meta["event_count"]),
        )
