"""Spatiotemporal event mining over incident report collections.

Pipeline: ingest/georeference reports against a county gazetteer, tokenize
their text into a timestamped corpus, fit static or continuous-time topic
models, aggregate into decision tables / choropleth layers / time series,
and serve everything over a CLI and HTTP API with KML/GeoJSON export.
"""

__version__ = "0.1.0"
