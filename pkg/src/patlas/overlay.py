"""Map overlay emission: KML 2.2 and GeoJSON point documents.

Two styles mirror the two city statistics: citation-significance colors
and portfolio-percentile colors. Emission is pure serialization with
pinned number formatting (6-decimal coordinates, 4-decimal sizes), so a
given node list always produces byte-identical output.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

from .citystats import CityAggregate

__all__ = [
    "OverlayNode",
    "build_citation_overlay",
    "build_portfolio_overlay",
    "emit_geojson",
    "emit_kml",
    "node_size",
]

SIZE_MIN = 0.4
SIZE_SCALE = 0.3


def node_size(patent_count: int) -> float:
    """Icon scale, proportionate to the logarithm of the patent count."""
    if patent_count < 1:
        raise ValueError("node needs at least one patent")
    return SIZE_MIN + SIZE_SCALE * math.log(patent_count)


@dataclass(frozen=True)
class OverlayNode:
    lat: float
    lon: float
    label: str
    patents: int
    size: float
    color: str
    class_label: str
    description: str


def _surviving(scored: Iterable[CityAggregate], min_patents: int) -> list[CityAggregate]:
    # Unmatched cities stay in the CSV tables but never become nodes.
    kept = [
        a
        for a in scored
        if a.patent_count >= min_patents and a.geo is not None
    ]
    kept.sort(key=lambda a: a.key)
    return kept


def build_citation_overlay(
    scored: Iterable[CityAggregate], min_patents: int = 2
) -> list[OverlayNode]:
    """One node per surviving city, colored by citation significance."""
    nodes = []
    for a in _surviving(scored, min_patents):
        if a.significance is None or a.expected is None:
            raise ValueError(f"city {a.name!r} not scored; run score_cities first")
        if a.z_score is None:
            verdict = "not tested (expected <= 5)"
        else:
            verdict = f"z = {a.z_score:.4f}{a.significance.stars}"
        description = (
            f"{a.patent_count} patents; top-cited {a.top_cited_count} observed "
            f"vs {a.expected:.4f} expected; {verdict}"
        )
        nodes.append(
            OverlayNode(
                lat=a.geo.lat,
                lon=a.geo.lon,
                label=a.name,
                patents=a.patent_count,
                size=node_size(a.patent_count),
                color=a.significance.color,
                class_label=a.significance.label,
                description=description,
            )
        )
    return nodes


def build_portfolio_overlay(
    scored: Iterable[CityAggregate], min_patents: int = 2
) -> list[OverlayNode]:
    """One node per surviving city, colored by percentile rank class."""
    nodes = []
    for a in _surviving(scored, min_patents):
        if a.rank_class is None or a.quantile is None:
            raise ValueError(f"city {a.name!r} not scored; run score_cities first")
        description = (
            f"{a.patent_count} patents; quantile {a.quantile:.4f}; "
            f"rank {a.rank_class.label}"
        )
        nodes.append(
            OverlayNode(
                lat=a.geo.lat,
                lon=a.geo.lon,
                label=a.name,
                patents=a.patent_count,
                size=node_size(a.patent_count),
                color=a.rank_class.color,
                class_label=a.rank_class.label,
                description=description,
            )
        )
    return nodes


def emit_geojson(nodes: Sequence[OverlayNode], mode: str) -> str:
    """RFC 7946 FeatureCollection, 2-space indent, LF endings."""
    lines = ['{', '  "type": "FeatureCollection",']
    if not nodes:
        lines.append('  "features": []')
    else:
        lines.append('  "features": [')
        for i, node in enumerate(nodes):
            comma = "," if i < len(nodes) - 1 else ""
            props = [
                ("label", json.dumps(node.label, ensure_ascii=False)),
                ("patents", str(node.patents)),
                ("size", f"{node.size:.4f}"),
                ("color", json.dumps(node.color)),
                ("class", json.dumps(node.class_label)),
                ("description", json.dumps(node.description, ensure_ascii=False)),
                ("mode", json.dumps(mode)),
            ]
            lines += [
                "    {",
                '      "type": "Feature",',
                '      "geometry": {',
                '        "type": "Point",',
                f'        "coordinates": [{node.lon:.6f}, {node.lat:.6f}]',
                "      },",
                '      "properties": {',
            ]
            for j, (name, rendered) in enumerate(props):
                sep = "," if j < len(props) - 1 else ""
                lines.append(f'        "{name}": {rendered}{sep}')
            lines += ["      }", f"    }}{comma}"]
        lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _kml_color(hex_rgb: str) -> str:
    """KML wants aabbggrr; the palette is RRGGBB at full opacity."""
    r, g, b = hex_rgb[0:2], hex_rgb[2:4], hex_rgb[4:6]
    return ("ff" + b + g + r).lower()


def emit_kml(nodes: Sequence[OverlayNode], document_name: str) -> str:
    """KML 2.2 document with one Placemark per node."""
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<kml xmlns="http://www.opengis.net/kml/2.2">',
        "  <Document>",
        f"    <name>{escape(document_name)}</name>",
    ]
    for node in nodes:
        lines += [
            "    <Placemark>",
            f"      <name>{escape(node.label)}</name>",
            f"      <description>{escape(node.description)}</description>",
            "      <Style>",
            "        <IconStyle>",
            f"          <color>{_kml_color(node.color)}</color>",
            f"          <scale>{node.size:.4f}</scale>",
            "        </IconStyle>",
            "      </Style>",
            "      <Point>",
            f"        <coordinates>{node.lon:.6f},{node.lat:.6f},0</coordinates>",
            "      </Point>",
            "    </Placemark>",
        ]
    lines += ["  </Document>", "</kml>"]
    return "\n".join(lines) + "\n"
