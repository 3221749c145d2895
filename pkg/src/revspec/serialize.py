"""Result persistence: CSV and JSON with a provenance header.

Every file starts with the same provenance block: tool version, config
hash, the surface and observable identifiers when known, and a written
line carrying the timestamp and wall time.  Rerunning a command with an
unchanged config reproduces the numeric payload byte for byte; only the
written line moves.  CSV is plain comma-separated with a header row and
LF endings so downstream plotting needs no custom dialect, and the
comment lines up top all start with '#'.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from datetime import datetime, timezone
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ._version import __version__
from .analysis import (GoodValueVerdict, MatchReport, ScalingFit, WindowSpec)
from .bargmann import TraceBoundRow
from .classical import ClassicalScan, RotationClass, ScanRow, WidthRow
from .errors import ConfigError
from .normalform import FourierTaylorSymbol, ReductionReport
from .quantization import Lattice, QuasiEigenvalue
from .spectra import SpectrumResult

__all__ = [
    "config_hash", "provenance", "write_csv", "write_json", "read_json",
    "spectrum_payload", "spectrum_from_payload", "spectrum_rows",
    "lattice_payload", "lattice_from_payload", "lattice_rows",
    "scan_payload", "scan_rows", "width_rows", "match_payload",
    "match_rows", "scaling_payload", "scaling_rows", "verdict_payload",
    "verdict_rows", "trace_payload", "trace_rows", "reduction_payload",
    "symbol_payload",
]


def config_hash(cfg: dict) -> str:
    """Twelve hex digits of the canonical-JSON digest of a config dict."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def provenance(cfg_hash: str, surface: str = "", observable: str = "",
               extra: Optional[dict] = None) -> Dict[str, str]:
    prov = {"tool": "revspec", "version": __version__,
            "config_hash": cfg_hash}
    if surface:
        prov["surface"] = surface
    if observable:
        prov["observable"] = observable
    if extra:
        prov.update({k: str(v) for k, v in extra.items()})
    return prov


def _written_line(wall_s: float) -> str:
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return f"{stamp} wall={wall_s:.3f}s"


def _cell(v):
    # repr of a python float round-trips and is stable across runs
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence],
              prov: Dict[str, str], wall_s: float = 0.0,
              timestamp: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in prov.items():
            fh.write(f"# {k}: {v}\n")
        if timestamp:
            fh.write(f"# written: {_written_line(wall_s)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([_cell(v) for v in r])


def write_json(path, kind: str, payload: dict, prov: Dict[str, str],
               wall_s: float = 0.0, timestamp: bool = True) -> None:
    prov = dict(prov)
    if timestamp:
        prov["written"] = _written_line(wall_s)
    doc = {"format": f"{kind}/1", "provenance": prov, "payload": payload}
    with open(path, "w") as fh:
        # allow_nan=False: refuse to emit the non-standard NaN/Infinity
        # tokens rather than write a file strict parsers cannot read
        json.dump(doc, fh, sort_keys=True, indent=1, allow_nan=False)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if "format" not in doc or "payload" not in doc:
        raise ConfigError(f"{path}: not a recognized result file")
    return doc


def _floats(xs) -> List[float]:
    return [float(x) for x in np.asarray(xs, dtype=float)]


# ---------------------------------------------------------------------------
# spectra


def spectrum_payload(sr: SpectrumResult) -> dict:
    params = {}
    for k, v in sr.params.items():
        if isinstance(v, tuple):
            v = list(v)
        params[k] = v
    return {
        "eigenvalues_re": _floats(np.asarray(sr.eigenvalues).real),
        "eigenvalues_im": _floats(np.asarray(sr.eigenvalues).imag),
        "modes": [m if isinstance(m, str) else int(m) for m in sr.modes],
        "residuals": _floats(sr.residuals),
        "params": params,
        "symmetry_doubled": bool(sr.symmetry_doubled),
    }


def spectrum_from_payload(payload: dict) -> SpectrumResult:
    lam = (np.asarray(payload["eigenvalues_re"], dtype=float)
           + 1j * np.asarray(payload["eigenvalues_im"], dtype=float))
    return SpectrumResult(
        eigenvalues=lam,
        modes=tuple(m if isinstance(m, str) else int(m)
                    for m in payload["modes"]),
        residuals=np.asarray(payload["residuals"], dtype=float),
        params=dict(payload.get("params", {})),
        symmetry_doubled=bool(payload.get("symmetry_doubled", False)))


SPECTRUM_COLUMNS = ("re", "im", "mode", "residual")


def spectrum_rows(sr: SpectrumResult):
    for z, m, r in zip(sr.eigenvalues, sr.modes, sr.residuals):
        yield (float(z.real), float(z.imag), m, float(r))


# ---------------------------------------------------------------------------
# lattices


def _class_fields(rc: RotationClass) -> dict:
    return {"kind": rc.kind, "m": rc.m, "n": rc.n,
            "alpha": rc.alpha, "d": rc.d, "q_max": rc.q_max}


def _class_from_fields(d: dict) -> RotationClass:
    return RotationClass(kind=d["kind"], m=int(d["m"]), n=int(d["n"]),
                         alpha=float(d["alpha"]), d=float(d["d"]),
                         q_max=int(d["q_max"]))


def lattice_payload(lat: Lattice) -> dict:
    return {
        "surface_id": lat.surface_id, "q_id": lat.q_id,
        "h": lat.h, "eps": lat.eps, "window": list(lat.window),
        "entries": [
            {"k1": p.k1, "k2": p.k2, "E": p.E, "F": p.F,
             "re": p.z.real, "im": p.z.imag,
             "torus_class": _class_fields(p.torus_class),
             "near_degenerate": bool(p.near_degenerate)}
            for p in lat.entries],
    }


def lattice_from_payload(payload: dict) -> Lattice:
    entries = tuple(
        QuasiEigenvalue(
            k1=int(e["k1"]), k2=int(e["k2"]), E=float(e["E"]),
            F=float(e["F"]), z=complex(float(e["re"]), float(e["im"])),
            torus_class=_class_from_fields(e["torus_class"]),
            near_degenerate=bool(e["near_degenerate"]))
        for e in payload["entries"])
    return Lattice(surface_id=payload["surface_id"], q_id=payload["q_id"],
                   h=float(payload["h"]), eps=float(payload["eps"]),
                   window=tuple(payload["window"]), entries=entries)


LATTICE_COLUMNS = ("k1", "k2", "E", "F", "re", "im", "class", "height",
                   "near_degenerate")


def lattice_rows(lat: Lattice):
    for p in lat.entries:
        yield (p.k1, p.k2, p.E, p.F, p.z.real, p.z.imag,
               p.torus_class.kind, p.torus_class.height, p.near_degenerate)


# ---------------------------------------------------------------------------
# classical scans


SCAN_COLUMNS = ("a", "omega", "class", "m", "n", "cert_alpha", "cert_d",
                "q_avg", "qinf_lo", "qinf_hi", "T")


def scan_rows(scan: ClassicalScan):
    for r in scan.rows:
        rc = r.rotation_class
        yield (r.a, r.omega, rc.kind, rc.m, rc.n, rc.alpha, rc.d,
               r.q_avg, r.qinf_lo, r.qinf_hi, r.T)


def scan_payload(scan: ClassicalScan) -> dict:
    return {
        "surface_id": scan.surface_id, "q_id": scan.q_id,
        "rows": [
            {"a": r.a, "omega": r.omega,
             "rotation_class": _class_fields(r.rotation_class),
             "q_avg": r.q_avg, "qinf_lo": r.qinf_lo, "qinf_hi": r.qinf_hi,
             "T": r.T}
            for r in scan.rows],
    }


WIDTH_COLUMNS = ("height", "m", "n", "a", "width")


def width_rows(rows: Sequence[WidthRow]):
    for r in rows:
        yield (r.height, r.m, r.n, r.a, r.width)


# ---------------------------------------------------------------------------
# match reports


MATCH_COLUMNS = ("re", "im", "k1", "k2", "dist")


def match_rows(rep: MatchReport):
    for p in rep.pairs:
        yield (p.eigenvalue.real, p.eigenvalue.imag,
               p.point.k1, p.point.k2, p.distance)


def match_payload(rep: MatchReport,
                  w: Optional[WindowSpec] = None) -> dict:
    out = {
        "pairs": [
            {"re": p.eigenvalue.real, "im": p.eigenvalue.imag,
             "k1": p.point.k1, "k2": p.point.k2,
             "lattice_re": p.point.z.real, "lattice_im": p.point.z.imag,
             "dist": p.distance}
            for p in rep.pairs],
        "max_distance": rep.max_distance,
        "metric_im_scale": rep.metric_im_scale,
        "n_matched": rep.n_matched,
        "unmatched_spectrum": [[z.real, z.imag]
                               for z in rep.unmatched_spectrum],
        "unmatched_lattice": [
            {"k1": p.k1, "k2": p.k2, "re": p.z.real, "im": p.z.imag}
            for p in rep.unmatched_lattice],
    }
    if w is not None:
        out["window"] = {"F0": w.F0, "C": w.C, "eps": w.eps,
                         "delta": w.delta, "E_center": w.E_center,
                         "rect": list(w.rect)}
    return out


# ---------------------------------------------------------------------------
# scaling fits, verdicts, trace sweeps, reductions


SCALING_COLUMNS = ("eps", "h", "count")


def scaling_rows(fit: ScalingFit):
    for e, h, c in fit.points:
        yield (e, h, c)


def scaling_payload(fit: ScalingFit) -> dict:
    return {"points": [list(p) for p in fit.points],
            "gamma": fit.gamma, "r_squared": fit.r_squared}


VERDICT_COLUMNS = ("F0", "good", "failed_condition", "witness_a",
                   "height_cutoff")


def verdict_rows(verdicts: Sequence[GoodValueVerdict]):
    for v in verdicts:
        ff = v.first_failure
        yield (v.F0, v.good, ff.name if ff else "",
               ff.a if ff else float("nan"), v.height_cutoff)


def verdict_payload(verdicts: Sequence[GoodValueVerdict]) -> dict:
    return {"verdicts": [
        {"F0": v.F0, "alpha": v.alpha, "beta": v.beta, "gamma": v.gamma,
         "d": v.d, "height_cutoff": v.height_cutoff, "good": v.good,
         "conditions": [
             {"name": c.name, "ok": c.ok, "witness": c.witness,
              "a": None if math.isnan(c.a) else c.a}
             for c in v.conditions]}
        for v in verdicts]}


TRACE_COLUMNS = ("h", "M", "trace", "tr_norm", "reference",
                 "rel_trace_defect", "positivity_defect", "tail_estimate")


def trace_rows(rows: Sequence[TraceBoundRow]):
    for r in rows:
        yield (r.h, r.M, r.trace, r.tr_norm, r.reference,
               r.rel_trace_defect, r.positivity_defect, r.tail_estimate)


def trace_payload(rows: Sequence[TraceBoundRow]) -> dict:
    return {"rows": [
        {"h": r.h, "M": r.M, "trace": r.trace, "tr_norm": r.tr_norm,
         "reference": r.reference, "rel_trace_defect": r.rel_trace_defect,
         "positivity_defect": r.positivity_defect,
         "tail_estimate": r.tail_estimate}
        for r in rows]}


def reduction_payload(rep: ReductionReport) -> dict:
    return {"order": rep.order,
            "dropped_norms": list(rep.dropped_norms),
            "step_residuals": list(rep.step_residuals),
            "initial_residual": rep.initial_residual,
            "final_residual": rep.final_residual}


def symbol_payload(sym: FourierTaylorSymbol) -> dict:
    """Full Fourier-Taylor data; 2D coefficient tables as nested lists."""
    g = sym.grid
    return {
        "k_max": sym.k_max,
        "tail_norm": sym.tail_norm,
        "xi1": _floats(g.xi1), "xi2": _floats(g.xi2),
        "modes": [
            {"k1": k[0], "k2": k[1],
             "re": np.asarray(sym.coeff(k)).real.tolist(),
             "im": np.asarray(sym.coeff(k)).imag.tolist()}
            for k in sorted(sym.modes)],
    }
