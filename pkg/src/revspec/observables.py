"""Builtin observables q(s, theta): trig polynomials in the angle with
analytic meridian profiles.

Every perturbation used by the laboratory is a finite sum of terms

    amp * S(s) * T(theta),   S, T in {1, cos(k .), sin(k .)},

which keeps three views of the same object cheap and exact: pointwise
evaluation for flow averages, the theta-mean for rotational reductions,
and complex theta-Fourier coefficients for mode-coupled operators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import DomainError

_KINDS = ("const", "cos", "sin")


@dataclass(frozen=True)
class Term:
    amp: float
    s_kind: str
    s_freq: float
    theta_kind: str
    theta_freq: int

    def __post_init__(self):
        for kind, freq, label in ((self.s_kind, self.s_freq, "s"),
                                  (self.theta_kind, self.theta_freq, "theta")):
            if kind not in _KINDS:
                raise DomainError(f"unknown {label} factor kind {kind!r}")
            if kind == "sin" and freq == 0:
                raise DomainError(f"sin with zero {label} frequency is the zero term")
        if self.theta_freq != int(self.theta_freq) or self.theta_freq < 0:
            raise DomainError("theta frequency must be a nonnegative integer")

    def s_part(self, s: np.ndarray) -> np.ndarray:
        if self.s_kind == "const":
            return np.ones_like(s)
        fn = np.cos if self.s_kind == "cos" else np.sin
        return fn(self.s_freq * s)

    def theta_part(self, theta: np.ndarray) -> np.ndarray:
        if self.theta_kind == "const" or self.theta_freq == 0:
            return np.ones_like(theta)
        fn = np.cos if self.theta_kind == "cos" else np.sin
        return fn(self.theta_freq * theta)


def _norm_term(amp, s_kind, s_freq, theta_kind, theta_freq) -> Term:
    if s_kind == "cos" and s_freq == 0:
        s_kind, s_freq = "const", 0.0
    if theta_kind == "cos" and theta_freq == 0:
        theta_kind, theta_freq = "const", 0
    return Term(float(amp), s_kind, float(s_freq), theta_kind, int(theta_freq))


@dataclass(frozen=True)
class Observable:
    terms: Tuple[Term, ...]

    def __call__(self, s, theta) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(np.broadcast(s, theta).shape)
        for t in self.terms:
            out += t.amp * t.s_part(s) * t.theta_part(theta)
        return out

    @property
    def theta_degree(self) -> int:
        return max((t.theta_freq for t in self.terms
                    if t.theta_kind != "const"), default=0)

    @property
    def is_rotational(self) -> bool:
        return self.theta_degree == 0

    def theta_mean(self, s) -> np.ndarray:
        """Angular average at fixed s; real for real observables."""
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for t in self.terms:
            if t.theta_kind == "const":
                out += t.amp * t.s_part(s)
        return out

    def fourier_coeff(self, k: int, s) -> np.ndarray:
        """Complex coefficient of e^{i k theta} at the sampled s values.

        Satisfies coeff(-k) = conj(coeff(k)) since all terms are real.
        """
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape, dtype=complex)
        for t in self.terms:
            prof = t.amp * t.s_part(s)
            if t.theta_kind == "const":
                if k == 0:
                    out += prof
            elif abs(k) == t.theta_freq:
                if t.theta_kind == "cos":
                    out += 0.5 * prof
                else:
                    out += (-0.5j if k > 0 else 0.5j) * prof
        return out

    @property
    def ident(self) -> str:
        bits = []
        for t in sorted(self.terms, key=lambda t: (t.theta_freq, t.theta_kind,
                                                   t.s_freq, t.s_kind)):
            bits.append(f"{t.amp!r}*{t.s_kind}:{t.s_freq!r}"
                        f"*{t.theta_kind}:{t.theta_freq}")
        return "+".join(bits) if bits else "0"


def make_observable(term_specs) -> Observable:
    """Assemble an observable from (amp, s_spec, theta_spec) triples.

    A factor spec is "1" for the constant factor or "cos:k" / "sin:k".
    """
    terms = []
    for amp, s_spec, theta_spec in term_specs:
        s_kind, s_freq = _parse_factor(s_spec)
        theta_kind, theta_freq = _parse_factor(theta_spec)
        terms.append(_norm_term(amp, s_kind, s_freq, theta_kind, theta_freq))
    return Observable(tuple(terms))


def _parse_factor(spec: str):
    spec = str(spec).strip()
    if spec in ("1", "const"):
        return "const", 0
    if ":" not in spec:
        raise DomainError(f"cannot parse observable factor {spec!r}")
    kind, _, freq = spec.partition(":")
    if kind not in ("cos", "sin"):
        raise DomainError(f"cannot parse observable factor {spec!r}")
    return kind, float(freq)


def constant(c: float) -> Observable:
    return make_observable([(c, "1", "1")])


def builtin_observable(name: str) -> Observable:
    """Named observables used throughout the test battery."""
    if name == "unit":
        return constant(1.0)
    if name == "cos2s":
        return make_observable([(1.0, "cos:2", "1")])
    if name == "resonant-ladder":
        # one resonant angular mode per target height, weights decaying
        # geometrically so measured interval widths separate cleanly
        return make_observable(
            [(0.4 * 8.0 ** -(n - 4), f"cos:{n - 1}", f"cos:{n}")
             for n in range(4, 8)])
    raise DomainError(f"unknown builtin observable {name!r}")
