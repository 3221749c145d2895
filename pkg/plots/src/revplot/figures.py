"""The four figure kinds and the machinery shared between them.

A FigureSpec is built first: it reads every input once, checks the
documented schema, and refuses mixed config hashes.  Rendering then
re-reads the inputs and writes exactly one SVG or PNG; the result is a
pure function of (input files, spec) apart from the embedded date,
which --no-timestamp removes.  Marker ids in SVG output are salted
with a fixed string and text stays text, so disabling the date makes
repeated renders byte-identical.

Single process, single thread; there is nothing here worth
parallelizing.
"""

from __future__ import annotations

import datetime
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "revplot"
matplotlib.rcParams["svg.fonttype"] = "none"

from matplotlib import pyplot as plt
from matplotlib.patches import Rectangle

from .errors import SchemaError
from .io import Doc, Table, read_doc, read_table, require_one_hash

KINDS = ("spectrum-overlay", "classical-curves", "scaling-loglog",
         "width-vs-height")

# upstream table schemas, by file role
SPECTRUM_COLUMNS = ("re", "im", "mode", "residual")
LATTICE_COLUMNS = ("k1", "k2", "E", "F", "re", "im", "class", "height",
                   "near_degenerate")
SCAN_COLUMNS = ("a", "omega", "class", "m", "n", "cert_alpha", "cert_d",
                "q_avg", "qinf_lo", "qinf_hi", "T")
SCALING_COLUMNS = ("eps", "h", "count")
WIDTH_COLUMNS = ("height", "m", "n", "a", "width")

_ARITY = {"spectrum-overlay": (2, 3), "classical-curves": (1, 1),
          "scaling-loglog": (2, 2), "width-vs-height": (1, 1)}


@dataclass(frozen=True)
class FigureSpec:
    """What to draw, from which files, into which image."""

    kind: str
    inputs: Tuple[str, ...]
    out: str
    window: Optional[Tuple[float, float, float, float]] = None
    title: Optional[str] = None
    timestamp: bool = True
    dpi: int = 150
    config_hash: Optional[str] = field(default=None, compare=False)

    @classmethod
    def build(cls, kind: str, inputs: Sequence[str], out: str,
              window: Optional[Sequence[float]] = None,
              title: Optional[str] = None, timestamp: bool = True,
              dpi: int = 150) -> "FigureSpec":
        if kind not in KINDS:
            raise SchemaError(f"unknown figure kind {kind!r}; "
                              f"one of {', '.join(KINDS)}")
        ext = os.path.splitext(out)[1].lower()
        if ext not in (".svg", ".png"):
            raise SchemaError(f"output {out!r} must end in .svg or .png")
        lo, hi = _ARITY[kind]
        if not lo <= len(inputs) <= hi:
            want = str(lo) if lo == hi else f"{lo} or {hi}"
            raise SchemaError(f"{kind} takes {want} input files, "
                              f"got {len(inputs)}")
        if window is not None:
            window = tuple(float(v) for v in window)
            if len(window) != 4:
                raise SchemaError("window takes four numbers: "
                                  "re_lo re_hi im_lo im_hi")
        sources = _load(kind, tuple(inputs))
        ch = require_one_hash(sources)
        return cls(kind=kind, inputs=tuple(inputs), out=out,
                   window=window, title=title, timestamp=bool(timestamp),
                   dpi=int(dpi), config_hash=ch)


@dataclass(frozen=True)
class RenderResult:
    path: str
    counts: Dict[str, int]
    xlim: Tuple[float, float]
    ylim: Tuple[float, float]
    notes: Tuple[str, ...] = ()


def _load(kind: str, inputs: Tuple[str, ...]):
    """Read and schema-check every input for the given kind."""
    if kind == "spectrum-overlay":
        out = [read_table(inputs[0], SPECTRUM_COLUMNS),
               read_table(inputs[1], LATTICE_COLUMNS)]
        if len(inputs) == 3:
            out.append(read_doc(inputs[2], "match"))
        return out
    if kind == "classical-curves":
        return [read_table(inputs[0], SCAN_COLUMNS)]
    if kind == "scaling-loglog":
        return [read_table(inputs[0], SCALING_COLUMNS),
                read_doc(inputs[1], "scaling")]
    return [read_table(inputs[0], WIDTH_COLUMNS)]


def _pad(lo: float, hi: float, frac: float = 0.06) -> Tuple[float, float]:
    span = hi - lo
    if span <= 0.0:
        span = max(abs(lo), 1.0)
    return lo - frac * span, hi + frac * span


def _match_rect(doc: Doc) -> Optional[Tuple[float, float, float, float]]:
    w = doc.payload.get("window")
    if w is None:
        return None
    rect = w.get("rect")
    if (not isinstance(rect, (list, tuple)) or len(rect) != 4
            or not all(isinstance(v, (int, float)) for v in rect)):
        raise SchemaError(f"{doc.path}: window.rect is not four numbers")
    return tuple(float(v) for v in rect)


def _spectrum_overlay(spec: FigureSpec, sources, ax) -> RenderResult:
    t_spec: Table = sources[0]
    t_lat: Table = sources[1]
    sre = t_spec.column("re")
    sim = t_spec.column("im")
    lre = t_lat.column("re")
    lim = t_lat.column("im")
    rect = spec.window
    if rect is None and len(sources) == 3:
        rect = _match_rect(sources[2])

    notes = []
    ax.plot(lre, lim, "x", color="tab:red", ms=7.0, mew=1.4,
            ls="none", label="lattice")
    ax.plot(sre, sim, "o", color="tab:blue", ms=5.0, mfc="none",
            mew=1.2, ls="none", label="eigenvalues")
    if rect is not None:
        ax.add_patch(Rectangle((rect[0], rect[2]), rect[1] - rect[0],
                               rect[3] - rect[2], fill=False,
                               edgecolor="tab:green", ls="--", lw=1.2,
                               label="window"))
    if not sre:
        ax.text(0.5, 0.5, "0 eigenvalues", transform=ax.transAxes,
                ha="center", va="center", fontsize=12)
        notes.append("0 eigenvalues")

    xs = sre + lre + ([rect[0], rect[1]] if rect else [])
    ys = sim + lim + ([rect[2], rect[3]] if rect else [])
    if xs:
        ax.set_xlim(*_pad(min(xs), max(xs)))
        ax.set_ylim(*_pad(min(ys), max(ys)))
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(spec.title or "eigenvalues against the "
                               "quasi-eigenvalue lattice")
    return RenderResult(path=spec.out,
                        counts={"eigenvalues": len(sre),
                                "lattice": len(lre),
                                "window": 1 if rect is not None else 0},
                        xlim=ax.get_xlim(), ylim=ax.get_ylim(),
                        notes=tuple(notes))


def _classical_curves(spec: FigureSpec, sources, axes) -> RenderResult:
    t: Table = sources[0]
    a = t.column("a")
    om = t.column("omega")
    cls = t.column("class", cast=str)
    ms = t.column("m", cast=lambda s: int(float(s)))
    ns = t.column("n", cast=lambda s: int(float(s)))
    qa = t.column("q_avg")
    qlo = t.column("qinf_lo")
    qhi = t.column("qinf_hi")

    top, bot = axes
    top.plot(a, om, "-", color="tab:blue", lw=1.4)
    bot.plot(a, qa, "-", color="tab:blue", lw=1.4, label="flow average")
    bot.fill_between(a, qlo, qhi, color="tab:blue", alpha=0.18,
                     lw=0.0, label="finite-time band")

    n_rational = 0
    for ai, oi, ci, mi, ni in zip(a, om, cls, ms, ns):
        if ci != "rational":
            continue
        n_rational += 1
        for ax in (top, bot):
            ax.axvline(ai, color="tab:orange", ls=":", lw=0.9)
        top.plot([ai], [oi], "o", color="tab:orange", ms=5.0)
        top.annotate(f"{mi}/{ni}", (ai, oi), textcoords="offset points",
                     xytext=(4, 5), fontsize=8, color="tab:orange")

    top.set_ylabel("omega")
    bot.set_ylabel("flow average of q")
    bot.set_xlabel("a")
    bot.legend(loc="best", fontsize=8)
    top.set_title(spec.title or "rotation number and flow average")
    return RenderResult(path=spec.out,
                        counts={"rows": len(a), "rational": n_rational},
                        xlim=bot.get_xlim(), ylim=bot.get_ylim())


def _scaling_loglog(spec: FigureSpec, sources, ax) -> RenderResult:
    t: Table = sources[0]
    doc: Doc = sources[1]
    eps = t.column("eps")
    hs = t.column("h")
    counts = t.column("count", cast=lambda s: int(float(s)))
    if not eps:
        raise SchemaError(f"{t.path}: no data rows")
    if any(e <= 0 for e in eps) or any(c <= 0 for c in counts):
        raise SchemaError(f"{t.path}: log axes need positive eps "
                          f"and counts")
    gamma = doc.payload.get("gamma")
    r2 = doc.payload.get("r_squared")
    if not isinstance(gamma, (int, float)) or not isinstance(
            r2, (int, float)):
        raise SchemaError(f"{doc.path}: payload lacks numeric gamma "
                          f"and r_squared")

    ys = [c * h * h for c, h in zip(counts, hs)]
    ax.loglog(eps, ys, "o", color="tab:blue", ms=6.0, ls="none",
              label="count * h^2")
    # guide line with the fitted slope, anchored at the log-mean point
    xbar = math.fsum(math.log(e) for e in eps) / len(eps)
    ybar = math.fsum(math.log(y) for y in ys) / len(ys)
    lo, hi = min(eps) * 0.9, max(eps) * 1.1
    gx = [lo, hi]
    gy = [math.exp(ybar + gamma * (math.log(x) - xbar)) for x in gx]
    ax.loglog(gx, gy, "-", color="tab:orange", lw=1.2,
              label=f"slope {gamma:.3f}")
    note = f"slope {gamma:.3f} (r^2 = {r2:.3f})"
    ax.text(0.04, 0.92, note, transform=ax.transAxes, fontsize=9)

    ax.set_xlabel("eps")
    ax.set_ylabel("count * h^2")
    ax.legend(loc="lower right", fontsize=8)
    ax.set_title(spec.title or "window count scaling")
    return RenderResult(path=spec.out, counts={"points": len(eps)},
                        xlim=ax.get_xlim(), ylim=ax.get_ylim(),
                        notes=(note,))


def _width_vs_height(spec: FigureSpec, sources, ax) -> RenderResult:
    t: Table = sources[0]
    heights = t.column("height", cast=lambda s: int(float(s)))
    ms = t.column("m", cast=lambda s: int(float(s)))
    ns = t.column("n", cast=lambda s: int(float(s)))
    widths = t.column("width")
    if not heights:
        raise SchemaError(f"{t.path}: no data rows")
    if any(k <= 0 for k in heights) or any(w <= 0 for w in widths):
        raise SchemaError(f"{t.path}: log axes need positive heights "
                          f"and widths")

    ax.loglog(heights, widths, "o-", color="tab:blue", ms=6.0, lw=1.0)
    for k, mi, ni, w in zip(heights, ms, ns, widths):
        ax.annotate(f"{mi}/{ni}", (k, w), textcoords="offset points",
                    xytext=(5, 4), fontsize=8)
    ax.set_xlabel("height |m| + n")
    ax.set_ylabel("interval width")
    ax.set_title(spec.title or "interval width against rational height")
    return RenderResult(path=spec.out, counts={"points": len(heights)},
                        xlim=ax.get_xlim(), ylim=ax.get_ylim())


def render(spec: FigureSpec) -> RenderResult:
    """Draw the figure and write it to spec.out."""
    sources = _load(spec.kind, spec.inputs)
    require_one_hash(sources)
    if spec.kind == "classical-curves":
        fig, axes = plt.subplots(2, 1, sharex=True, figsize=(6.4, 6.0))
    else:
        fig, axes = plt.subplots(figsize=(6.4, 4.8))
    try:
        if spec.kind == "spectrum-overlay":
            res = _spectrum_overlay(spec, sources, axes)
        elif spec.kind == "classical-curves":
            res = _classical_curves(spec, sources, axes)
        elif spec.kind == "scaling-loglog":
            res = _scaling_loglog(spec, sources, axes)
        else:
            res = _width_vs_height(spec, sources, axes)
        fig.tight_layout()
        metadata = {}
        if spec.timestamp:
            now = datetime.datetime.now(datetime.timezone.utc)
            metadata["Date"] = now.strftime("%Y-%m-%dT%H:%M:%SZ")
        elif spec.out.lower().endswith(".svg"):
            metadata["Date"] = None  # suppress the backend's default date
        fig.savefig(spec.out, dpi=spec.dpi, metadata=metadata)
    finally:
        plt.close(fig)
    return res
