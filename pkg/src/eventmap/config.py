"""JSON config shared by the CLI and the HTTP service."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class AppConfig:
    store_path: str = "store"
    polygons_path: str | None = None
    stopwords_path: str | None = None
    tables: dict[str, str] = field(default_factory=dict)  # table name -> ProportionTable csv
    defaults: dict = field(default_factory=dict)  # fit/choropleth defaults

    @classmethod
    def from_dict(cls, obj: dict) -> "AppConfig":
        return cls(
            store_path=obj.get("store", obj.get("store_path", "store")),
            polygons_path=obj.get("polygons"),
            stopwords_path=obj.get("stopwords"),
            tables=dict(obj.get("tables", {})),
            defaults=dict(obj.get("defaults", {})),
        )

    @classmethod
    def load(cls, path: str | Path) -> "AppConfig":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))
