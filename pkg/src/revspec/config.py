"""Experiment configuration.

A single JSON file drives every command.  Unknown sections and
malformed fields are rejected with the offending key path in the
message, every knob has a default, and the parsed object keeps the
original dict so configs round-trip unchanged.  The perturbation
strength is written as a rule (p, c) meaning eps = c * h^p, which makes
regime sweeps one line.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from typing import Any, Dict, List

from .errors import ConfigError
from .geometry import SurfaceProfile, make_profile
from .observables import Observable, builtin_observable, make_observable

__all__ = ["ExperimentConfig", "load_config", "parse_config", "DEFAULTS"]


DEFAULTS: Dict[str, Any] = {
    "surface": {"family": "sphere", "params": []},
    "observable": {"builtin": "cos2s", "terms": None},
    "numerics": {
        "h": [0.1],
        "eps_rule": {"p": 0.8, "c": 1.0},
        "N": 1200,
        "m_max": 12,
        "M_theta": 6,
        "T": 60.0,
        "n_starts": 11,
        "kernel": "bump",
        "form": "weighted",
        "dense_cap": 6000,
        "floor": 1e-6,
    },
    "window": {"F0": 0.0, "C": 4.0, "delta": 0.0, "E_center": 1.0},
    "scan": {"a_lo": 0.05, "a_hi": None, "n": 40, "q_max": 1000,
             "alpha": 0.05, "d": 0.5},
    "lattice": {"E_lo": 0.8, "E_hi": 1.2, "classify": True},
    "spectrum": {"kind": "rotational", "rect": None},
    "match": {"spectrum_file": "", "lattice_file": ""},
    "normalform": {"source": "surface", "center": [0.45, 0.35],
                   "span": [0.1, 0.1], "shape": [7, 7], "k1_max": 4,
                   "N": 2, "lie_order": 3, "k_cap": None},
    "toeplitz": {"kind": "bump", "R": 1.0, "amp": 1.0, "width": 1.0,
                 "harmonic": 0, "h": [0.2, 0.1, 0.05]},
    "good_values": {"F0": [0.0], "alpha": 0.02, "beta": 0.15,
                    "gamma": 0.05, "d": 0.5},
    "output_dir": "out",
    "seed": 0,
}


def _merge(base: dict, over: dict, path: str) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config field {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{where!r} must be an object")
            out[key] = _merge(base[key], val, where)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _positive(cfg: dict, *paths):
    for p in paths:
        node: Any = cfg
        for part in p.split("."):
            node = node[part]
        vals = node if isinstance(node, list) else [node]
        for v in vals:
            if not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"{p!r} must be positive, got {node!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    raw: Dict[str, Any]
    effective: Dict[str, Any]

    def __getitem__(self, key: str):
        return self.effective[key]

    # -- builders ---------------------------------------------------------

    def surface(self) -> SurfaceProfile:
        s = self.effective["surface"]
        return make_profile(s["family"], s["params"])

    def observable(self) -> Observable:
        o = self.effective["observable"]
        if o["terms"] is not None:
            return make_observable(o["terms"])
        return builtin_observable(o["builtin"])

    def h_list(self) -> List[float]:
        return [float(h) for h in self.effective["numerics"]["h"]]

    def eps_for(self, h: float) -> float:
        rule = self.effective["numerics"]["eps_rule"]
        return float(rule["c"]) * h ** float(rule["p"])


def parse_config(raw: Dict[str, Any]) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    eff = _merge(DEFAULTS, raw, "")

    obs_raw = raw.get("observable", {})
    if isinstance(obs_raw, dict) and "terms" in obs_raw and "builtin" in obs_raw:
        raise ConfigError("observable: give either 'builtin' or 'terms'")
    _positive(eff, "numerics.h", "numerics.N", "numerics.T",
              "numerics.eps_rule.c", "window.C", "toeplitz.h")
    if not isinstance(eff["numerics"]["h"], list) or not eff["numerics"]["h"]:
        raise ConfigError("'numerics.h' must be a nonempty list")
    if eff["spectrum"]["kind"] not in ("rotational", "2d"):
        raise ConfigError("'spectrum.kind' must be 'rotational' or '2d'")
    rect = eff["spectrum"]["rect"]
    if rect is not None and len(rect) != 4:
        raise ConfigError("'spectrum.rect' needs [re_lo, re_hi, im_lo, im_hi]")
    if eff["scan"]["n"] < 2:
        raise ConfigError("'scan.n' must be at least 2")
    nf = eff["normalform"]
    if nf["source"] not in ("surface", "synthetic"):
        raise ConfigError("'normalform.source' must be 'surface' or 'synthetic'")
    if not isinstance(eff["good_values"]["F0"], list):
        raise ConfigError("'good_values.F0' must be a list of levels")
    if not math.isfinite(float(eff["window"]["F0"])):
        raise ConfigError("'window.F0' must be finite")
    return ExperimentConfig(raw=copy.deepcopy(raw), effective=eff)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    return parse_config(raw)
