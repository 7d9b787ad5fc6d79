"""Phase-invariant distance, magnitude gap and the stability ratio psi."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FrameSpec, as_vector, check_pair, inner
from .errors import DegeneratePair

TOL_DIST = 1e-12


@dataclass(frozen=True)
class PhaseAlignment:
    lam: complex | float
    aligned_distance: float

    def to_dict(self):
        lam = complex(self.lam)
        return {"lambda": [lam.real, lam.imag], "aligned_distance": self.aligned_distance}


@dataclass(frozen=True)
class PsiValue:
    numerator: float
    denominator: float

    @property
    def ratio(self) -> float:
        return self.numerator / self.denominator

    def to_dict(self):
        return {"numerator": self.numerator, "denominator": self.denominator, "ratio": self.ratio}


def optimal_phase(x, y):
    """Unimodular ``lam`` minimizing ``||x - lam y||``.

    Real vectors get ``sign(<x, y>)``, complex ones ``<x, y> / |<x, y>|``;
    ``<x, y> = 0`` gives ``+1`` (every phase is optimal there).
    """
    ip = inner(x, y)
    if np.iscomplexobj(x):
        a = abs(ip)
        return complex(1.0) if a == 0 else complex(ip / a)
    return -1.0 if ip < 0 else 1.0


def min_phase_dist(x, y) -> PhaseAlignment:
    """``min_{|lam|=1} ||x - lam y||`` together with the minimizing phase.

    The distance is evaluated as ``||x - lam y||`` at the optimal phase, which
    equals ``sqrt(||x||^2 + ||y||^2 - 2|<x,y>|)`` but does not lose digits
    when ``x`` and ``y`` nearly coincide.
    """
    x, y = check_pair(x, y)
    lam = optimal_phase(x, y)
    return PhaseAlignment(lam, float(np.linalg.norm(x - lam * y)))


def magnitude_gap(frame: FrameSpec, x, y) -> float:
    t = frame.analysis_matrix
    x = as_vector(frame, x)
    y = as_vector(frame, y)
    return float(np.linalg.norm(np.abs(t @ x) - np.abs(t @ y)))


def psi(frame: FrameSpec, x, y, tol_dist: float = TOL_DIST) -> PsiValue:
    x = as_vector(frame, x)
    y = as_vector(frame, y)
    den = min_phase_dist(x, y).aligned_distance
    if den <= tol_dist:
        raise DegeneratePair(f"pair is equal up to a unimodular scalar (distance {den:.3e})")
    return PsiValue(magnitude_gap(frame, x, y), den)


def psi_on_compact(frame: FrameSpec, x, y) -> float:
    """Psi at an orthogonal pair with ``||x|| = 1``: the distance is ``sqrt(1 + ||y||^2)``."""
    t = frame.analysis_matrix
    gap = np.linalg.norm(np.abs(t @ x) - np.abs(t @ y))
    return float(gap / np.sqrt(1.0 + np.vdot(y, y).real))
