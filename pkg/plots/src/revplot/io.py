"""Readers for the delimited files the numerical package writes.

Tables are comma-separated with a '#'-prefixed provenance block
(key: value lines) above a single header row; reports are JSON
documents of the shape {format, provenance, payload}.  Validation is
eager: a malformed file raises SchemaError at read time, never a
half-drawn figure later.  Nothing here writes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from .errors import HashMismatch, SchemaError


@dataclass(frozen=True)
class Table:
    path: str
    provenance: Dict[str, str]
    header: List[str]
    rows: List[List[str]]

    def column(self, name: str, cast=float) -> list:
        try:
            idx = self.header.index(name)
        except ValueError:
            raise SchemaError(f"{self.path}: no column {name!r}") from None
        out = []
        for i, row in enumerate(self.rows):
            try:
                out.append(cast(row[idx]))
            except ValueError:
                raise SchemaError(
                    f"{self.path}: row {i + 1}, column {name!r}: cannot "
                    f"read {row[idx]!r}") from None
        return out


@dataclass(frozen=True)
class Doc:
    path: str
    format: str
    provenance: Dict[str, str]
    payload: dict


def read_table(path: str,
               expect: Optional[Sequence[str]] = None) -> Table:
    prov: Dict[str, str] = {}
    header: Optional[List[str]] = None
    rows: List[List[str]] = []
    try:
        fh = open(path)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from None
    with fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                # provenance belongs above the header; a comment below it
                # means the file is not one of ours
                if header is not None:
                    raise SchemaError(f"{path}: comment below the header")
                body = line[1:].strip()
                if ":" in body:
                    key, val = body.split(":", 1)
                    prov[key.strip()] = val.strip()
                continue
            cells = line.split(",")
            if header is None:
                header = cells
                continue
            if len(cells) != len(header):
                raise SchemaError(
                    f"{path}: row with {len(cells)} cells under a "
                    f"{len(header)}-column header")
            rows.append(cells)
    if header is None:
        raise SchemaError(f"{path}: no header row")
    if expect is not None and header != list(expect):
        raise SchemaError(
            f"{path}: header {header} where {list(expect)} was expected")
    return Table(path=path, provenance=prov, header=header, rows=rows)


def read_doc(path: str, kind: Optional[str] = None) -> Doc:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: not a report document")
    for key in ("format", "provenance", "payload"):
        if key not in doc:
            raise SchemaError(f"{path}: missing {key!r}")
    if kind is not None and doc["format"] != f"{kind}/1":
        raise SchemaError(f"{path}: format {doc['format']!r} where "
                          f"{kind!r}/1 was expected")
    prov = doc["provenance"]
    if not isinstance(prov, dict):
        raise SchemaError(f"{path}: provenance is not an object")
    return Doc(path=path, format=doc["format"],
               provenance={str(k): str(v) for k, v in prov.items()},
               payload=doc["payload"])


def require_one_hash(sources: Sequence) -> Optional[str]:
    """All inputs carrying a config_hash must carry the same one.

    Returns the common hash, or None when no input declares any.
    """
    seen: Dict[str, str] = {}
    for src in sources:
        value = src.provenance.get("config_hash")
        if value is not None:
            seen.setdefault(str(value), src.path)
    if len(seen) > 1:
        detail = ", ".join(f"{path} has {h}"
                           for h, path in sorted(seen.items()))
        raise HashMismatch(f"config_hash disagrees across inputs: {detail}")
    return next(iter(seen), None)
