"""Spectra of weakly non-selfadjoint perturbations on surfaces of revolution.

The package follows the problem's own layering: `geometry` builds and
validates profiles, `classical` handles the geodesic flow (rotation
numbers, torus and finite-time averages, resonance widths),
`quantization` produces quasi-eigenvalue lattices, `spectra`
discretizes and diagonalizes the operators, `normalform` and `bargmann`
carry the averaging and quantization machinery, and `analysis` confronts
computed spectra with the predictions.  `revspec.cli` is the batch
entry point.
"""

from ._version import __version__
from .errors import RevspecError
from .geometry import SurfaceProfile, make_profile
from .observables import Observable, builtin_observable, make_observable
from .classical import (ClassicalScan, classify, q_infinity,
                        rotation_number, scan_classical, torus_average,
                        width_vs_height)
from .quantization import Lattice, actions, ebk_lattice, invert_actions
from .spectra import (SpectrumResult, eigensolve, full_spectrum_rotational,
                      mode_operator, operator_2d)
from .analysis import (MatchReport, ScalingFit, count_rational_window,
                       good_value_check, match_lattice, scaling_fit, window)

__all__ = [
    "__version__", "RevspecError",
    "SurfaceProfile", "make_profile",
    "Observable", "builtin_observable", "make_observable",
    "ClassicalScan", "classify", "q_infinity", "rotation_number",
    "scan_classical", "torus_average", "width_vs_height",
    "Lattice", "actions", "ebk_lattice", "invert_actions",
    "SpectrumResult", "eigensolve", "full_spectrum_rotational",
    "mode_operator", "operator_2d",
    "MatchReport", "ScalingFit", "count_rational_window",
    "good_value_check", "match_lattice", "scaling_fit", "window",
]
