"""Structural fingerprint of an SVG figure.

Golden-file comparisons here are structural, not pixel-exact: two
figures agree when they place the same number of marker instances and
carry the same text (tick labels, axis labels, annotations) inside the
same canvas, which pins point counts and axis ranges without breaking
on rasterization details.  Requires text kept as text in the SVG,
which this package's renderer guarantees.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Tuple

from .errors import SchemaError


@dataclass(frozen=True)
class SvgStructure:
    viewbox: str
    n_markers: int
    texts: Tuple[str, ...]  # sorted multiset


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def read_structure(path: str) -> SvgStructure:
    try:
        root = ET.parse(path).getroot()
    except (OSError, ET.ParseError) as exc:
        raise SchemaError(f"cannot read SVG {path}: {exc}") from None
    if _local(root.tag) != "svg":
        raise SchemaError(f"{path}: root element is not <svg>")
    n_use = 0
    texts = []
    for el in root.iter():
        name = _local(el.tag)
        if name == "use":
            n_use += 1
        elif name == "text":
            body = "".join(el.itertext()).strip()
            if body:
                texts.append(body)
    return SvgStructure(viewbox=root.get("viewBox", ""),
                        n_markers=n_use, texts=tuple(sorted(texts)))
