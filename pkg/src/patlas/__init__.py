"""patlas: patent-atlas toolkit.

Parses granted-patent corpora, geocodes inventor cities against a local
gazetteer, computes city-level citation and portfolio statistics,
group-level spatial concentration measures, and foreign-control tables,
and emits KML/GeoJSON map overlays.
"""

__version__ = "0.1.0"
