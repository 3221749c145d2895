"""Batch orchestration.

One executable, eight subcommands, one JSON config.  Each run writes
CSV and JSON results carrying the config hash, so downstream tooling
can refuse to mix files from different experiments.  Numeric payloads
are deterministic for a fixed config regardless of --threads; all file
writes happen in the main thread.

Exit codes: 0 on success, 1 on a numerical failure, 2 on a config
problem.  Failures also leave a machine-readable error.json in the
output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import List

import numpy as np

from . import serialize as ser
from ._version import __version__
from .analysis import (good_value_check, match_lattice, scaling_fit,
                       window)
from .bargmann import PlaneSymbol, verify_trace_bound
from .classical import scan_classical
from .config import ExperimentConfig, load_config
from .errors import ConfigError, HashMismatch, RevspecError
from .normalform import action_angle_symbols, make_grid, secular_reduce
from .quantization import ebk_lattice
from .spectra import eigensolve, full_spectrum_rotational, operator_2d

__all__ = ["main"]


def _outdir(args, cfg) -> str:
    out = args.out or (cfg.effective["output_dir"] if cfg else "out")
    os.makedirs(out, exist_ok=True)
    return out


def _prov(cfg: ExperimentConfig, **extra) -> dict:
    return ser.provenance(
        ser.config_hash(cfg.effective),
        surface=cfg.surface().ident,
        observable=cfg.observable().ident,
        extra=extra or None)


def _scan_grid(cfg) -> np.ndarray:
    sc = cfg.effective["scan"]
    surface = cfg.surface()
    a_hi = sc["a_hi"] if sc["a_hi"] is not None else 0.98 * surface.u_max
    return np.linspace(float(sc["a_lo"]), float(a_hi), int(sc["n"]))


# ---------------------------------------------------------------------------
# subcommands


def _cmd_scan_classical(cfg: ExperimentConfig, out: str, args) -> None:
    t0 = time.time()
    num = cfg.effective["numerics"]
    sc = cfg.effective["scan"]
    scan = scan_classical(
        cfg.surface(), cfg.observable(), _scan_grid(cfg),
        T=float(num["T"]), n_starts=int(num["n_starts"]),
        q_max=int(sc["q_max"]), alpha=float(sc["alpha"]),
        d=float(sc["d"]), kernel_name=num["kernel"])
    wall = time.time() - t0
    prov = _prov(cfg)
    ts = not args.no_timestamp
    ser.write_csv(os.path.join(out, "scan.csv"), ser.SCAN_COLUMNS,
                  ser.scan_rows(scan), prov, wall, timestamp=ts)
    ser.write_json(os.path.join(out, "scan.json"), "scan",
                   ser.scan_payload(scan), prov, wall, timestamp=ts)


def _cmd_lattice(cfg: ExperimentConfig, out: str, args) -> None:
    t0 = time.time()
    lt = cfg.effective["lattice"]
    sc = cfg.effective["scan"]
    h = cfg.h_list()[0]
    lat = ebk_lattice(
        cfg.surface(), cfg.observable(), h, cfg.eps_for(h),
        (float(lt["E_lo"]), float(lt["E_hi"])),
        classify_entries=bool(lt["classify"]), q_max=int(sc["q_max"]),
        alpha=float(sc["alpha"]), d=float(sc["d"]))
    wall = time.time() - t0
    prov = _prov(cfg, h=h, eps=cfg.eps_for(h))
    ts = not args.no_timestamp
    ser.write_csv(os.path.join(out, "lattice.csv"), ser.LATTICE_COLUMNS,
                  ser.lattice_rows(lat), prov, wall, timestamp=ts)
    ser.write_json(os.path.join(out, "lattice.json"), "lattice",
                   ser.lattice_payload(lat), prov, wall, timestamp=ts)


def _spectrum_for(cfg: ExperimentConfig, h: float):
    num = cfg.effective["numerics"]
    sp = cfg.effective["spectrum"]
    rect = tuple(sp["rect"]) if sp["rect"] is not None else None
    eps = cfg.eps_for(h)
    if sp["kind"] == "rotational":
        return full_spectrum_rotational(
            cfg.surface(), h, eps, cfg.observable(),
            m_max=int(num["m_max"]), N=int(num["N"]), rect=rect,
            form=num["form"])
    op = operator_2d(cfg.surface(), h, eps, cfg.observable(),
                     N_s=int(num["N"]), M_theta=int(num["M_theta"]),
                     cap=int(num["dense_cap"]),
                     E_ref=rect[1] if rect else 1.0)
    sr = eigensolve(op, window=(rect[0], rect[1]) if rect else None,
                    cap=int(num["dense_cap"]))
    if rect is not None and sr.eigenvalues.size:
        keep = ((sr.eigenvalues.imag >= rect[2])
                & (sr.eigenvalues.imag <= rect[3]))
        sr = type(sr)(eigenvalues=sr.eigenvalues[keep],
                      modes=tuple(np.asarray(sr.modes, dtype=object)[keep]),
                      residuals=sr.residuals[keep], params=sr.params)
    return sr


def _cmd_spectrum(cfg: ExperimentConfig, out: str, args) -> None:
    t0 = time.time()
    h = cfg.h_list()[0]
    sr = _spectrum_for(cfg, h)
    wall = time.time() - t0
    prov = _prov(cfg, h=h, eps=cfg.eps_for(h),
                 kind=cfg.effective["spectrum"]["kind"])
    ts = not args.no_timestamp
    ser.write_csv(os.path.join(out, "spectrum.csv"), ser.SPECTRUM_COLUMNS,
                  ser.spectrum_rows(sr), prov, wall, timestamp=ts)
    ser.write_json(os.path.join(out, "spectrum.json"), "spectrum",
                   ser.spectrum_payload(sr), prov, wall, timestamp=ts)


def _require_same(doc_a: dict, doc_b: dict, key: str) -> None:
    va = doc_a["provenance"].get(key, "")
    vb = doc_b["provenance"].get(key, "")
    if va != vb:
        raise HashMismatch(
            f"spectrum and lattice disagree on {key}: {va!r} vs {vb!r}")


def _cmd_match(cfg: ExperimentConfig, out: str, args) -> None:
    t0 = time.time()
    mt = cfg.effective["match"]
    if not mt["spectrum_file"] or not mt["lattice_file"]:
        raise ConfigError("'match.spectrum_file' and 'match.lattice_file' "
                          "are required")
    sdoc = ser.read_json(mt["spectrum_file"])
    ldoc = ser.read_json(mt["lattice_file"])
    for key in ("surface", "observable", "config_hash"):
        _require_same(sdoc, ldoc, key)
    spectrum = ser.spectrum_from_payload(sdoc["payload"])
    lattice = ser.lattice_from_payload(ldoc["payload"])
    wd = cfg.effective["window"]
    w = window(float(wd["F0"]), float(wd["C"]), lattice.eps,
               float(wd["delta"]), float(wd["E_center"]))
    rep = match_lattice(spectrum, lattice, w)
    wall = time.time() - t0
    prov = _prov(cfg)
    ts = not args.no_timestamp
    ser.write_csv(os.path.join(out, "match.csv"), ser.MATCH_COLUMNS,
                  ser.match_rows(rep), prov, wall, timestamp=ts)
    ser.write_json(os.path.join(out, "match.json"), "match",
                   ser.match_payload(rep, w), prov, wall, timestamp=ts)


def _cmd_count_scaling(cfg: ExperimentConfig, out: str, args) -> None:
    t0 = time.time()
    wd = cfg.effective["window"]
    hs = cfg.h_list()
    if len(hs) < 3:
        raise ConfigError("'numerics.h' needs at least 3 entries "
                          "for a scaling fit")

    def one(h: float):
        sr = _spectrum_for(cfg, h)
        eps = cfg.eps_for(h)
        w = window(float(wd["F0"]), float(wd["C"]), eps, 0.0,
                   float(wd["E_center"]))
        n = sum(1 for z in sr.expanded().eigenvalues if w.contains(z))
        return (eps, h, n)

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            points = list(pool.map(one, hs))
    else:
        points = [one(h) for h in hs]
    points.sort(key=lambda p: p[1], reverse=True)
    fit = scaling_fit(points)
    wall = time.time() - t0
    prov = _prov(cfg)
    ts = not args.no_timestamp
    ser.write_csv(os.path.join(out, "counts.csv"), ser.SCALING_COLUMNS,
                  ser.scaling_rows(fit), prov, wall, timestamp=ts)
    ser.write_json(os.path.join(out, "scaling.json"), "scaling",
                   ser.scaling_payload(fit), prov, wall, timestamp=ts)


def _cmd_normalform(cfg: ExperimentConfig, out: str, args) -> None:
    from .normalform import make_symbol  # synthetic path only

    t0 = time.time()
    nf = cfg.effective["normalform"]
    num = cfg.effective["numerics"]
    grid = make_grid(tuple(nf["center"]), tuple(nf["span"]),
                     tuple(int(n) for n in nf["shape"]))
    if nf["source"] == "surface":
        p_sym, q_sym = action_angle_symbols(
            cfg.surface(), cfg.observable(), grid, int(nf["k1_max"]))
    else:
        # synthetic: a nonresonant frequency with a gentle twist, and a
        # small mixed-mode perturbation; handy for quick pipeline checks
        phi = (1 + 5 ** 0.5) / 2
        x1, x2 = grid.meshes()
        p_sym = make_symbol(grid, {(0, 0): x2 + phi * x1 + 0.05 * x1 ** 2})
        q_sym = make_symbol(grid, {
            (0, 0): 0.2 + 0.1 * x1,
            (1, 0): 0.08, (-1, 0): 0.08,
            (0, 1): 0.05 + 0.02 * x2, (0, -1): 0.05 + 0.02 * x2,
            (1, 1): 0.03, (-1, -1): 0.03,
        })
    h = cfg.h_list()[0]
    eps = cfg.eps_for(h)
    reduced, report = secular_reduce(
        p_sym, q_sym, eps, N=int(nf["N"]), lie_order=int(nf["lie_order"]),
        floor=float(num["floor"]),
        k_cap=None if nf["k_cap"] is None else int(nf["k_cap"]))
    wall = time.time() - t0
    prov = _prov(cfg, eps=eps)
    ts = not args.no_timestamp
    ser.write_json(os.path.join(out, "reduction.json"), "reduction",
                   ser.reduction_payload(report), prov, wall, timestamp=ts)
    ser.write_json(os.path.join(out, "symbols.json"), "symbols",
                   {"p": ser.symbol_payload(p_sym),
                    "q": ser.symbol_payload(q_sym),
                    "reduced": ser.symbol_payload(reduced)},
                   prov, wall, timestamp=ts)


def _cmd_toeplitz_bench(cfg: ExperimentConfig, out: str, args) -> None:
    t0 = time.time()
    tp = cfg.effective["toeplitz"]
    p = PlaneSymbol(radial=tp["kind"], R=float(tp["R"]),
                    amp=float(tp["amp"]), width=float(tp["width"]),
                    harmonic=int(tp["harmonic"]))
    rows = verify_trace_bound(p, [float(h) for h in tp["h"]])
    wall = time.time() - t0
    prov = _prov(cfg, symbol=p.ident)
    ts = not args.no_timestamp
    ser.write_csv(os.path.join(out, "toeplitz.csv"), ser.TRACE_COLUMNS,
                  ser.trace_rows(rows), prov, wall, timestamp=ts)
    ser.write_json(os.path.join(out, "toeplitz.json"), "toeplitz",
                   ser.trace_payload(rows), prov, wall, timestamp=ts)


def _cmd_good_values(cfg: ExperimentConfig, out: str, args) -> None:
    t0 = time.time()
    num = cfg.effective["numerics"]
    sc = cfg.effective["scan"]
    gv = cfg.effective["good_values"]
    scan = scan_classical(
        cfg.surface(), cfg.observable(), _scan_grid(cfg),
        T=float(num["T"]), n_starts=int(num["n_starts"]),
        q_max=int(sc["q_max"]), alpha=float(sc["alpha"]),
        d=float(sc["d"]), kernel_name=num["kernel"])
    verdicts = [good_value_check(scan, float(F0), alpha=float(gv["alpha"]),
                                 beta=float(gv["beta"]),
                                 gamma=float(gv["gamma"]), d=float(gv["d"]))
                for F0 in gv["F0"]]
    wall = time.time() - t0
    prov = _prov(cfg)
    ts = not args.no_timestamp
    ser.write_csv(os.path.join(out, "verdicts.csv"), ser.VERDICT_COLUMNS,
                  ser.verdict_rows(verdicts), prov, wall, timestamp=ts)
    ser.write_json(os.path.join(out, "verdicts.json"), "verdicts",
                   ser.verdict_payload(verdicts), prov, wall, timestamp=ts)


_COMMANDS = {
    "scan-classical": _cmd_scan_classical,
    "lattice": _cmd_lattice,
    "spectrum": _cmd_spectrum,
    "match": _cmd_match,
    "count-scaling": _cmd_count_scaling,
    "normalform": _cmd_normalform,
    "toeplitz-bench": _cmd_toeplitz_bench,
    "good-values": _cmd_good_values,
}


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="revspec",
        description="Spectra of weakly non-selfadjoint perturbations on "
                    "surfaces of revolution")
    ap.add_argument("--version", action="version",
                    version=f"revspec {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, default=None,
                       help="RNG seed for noise-injection tests")
        p.add_argument("--no-timestamp", action="store_true",
                       help="omit the written line (reproducible files)")
    return ap


def _write_error(out: str, exc: Exception) -> None:
    try:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "error.json"), "w") as fh:
            record = {"error": {"type": type(exc).__name__,
                                "message": str(exc)}}
            field = getattr(exc, "field", None)
            if field:
                record["error"]["field"] = field
            json.dump(record, fh, indent=1)
            fh.write("\n")
    except OSError:
        pass


def main(argv: List[str] = None) -> int:
    args = _build_parser().parse_args(argv)
    cfg = None
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            eff = dict(cfg.effective)
            eff["seed"] = args.seed
            cfg = ExperimentConfig(raw=cfg.raw, effective=eff)
        out = _outdir(args, cfg)
        _COMMANDS[args.command](cfg, out, args)
        try:
            # a stale record from an earlier failed run would sit next to
            # good outputs and mislead anything probing for it
            os.remove(os.path.join(out, "error.json"))
        except OSError:
            pass
        return 0
    except ConfigError as exc:
        _write_error(args.out or "out", exc)
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RevspecError as exc:
        _write_error(args.out or (cfg.effective["output_dir"] if cfg
                                  else "out"), exc)
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
