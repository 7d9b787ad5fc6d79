"""Reduction of an arbitrary pair to an orthogonal pair with no larger psi.

For a phase-aligned pair (``<x, y>`` real and nonnegative) put ``s = x + y`` and
``d = x - y``. Because ``<x, s> + <s, y> = ||s||^2`` for aligned pairs, the
inner product ``<x - r s, y - r s>`` equals ``||s||^2 r^2 - ||s||^2 r + <x, y>``.
Its smaller root is

    R = (1 - sqrt(1 - 4 <x,y> / ||s||^2)) / 2 = (1 - ||d|| / ||s||) / 2,

using ``||s||^2 - ||d||^2 = 4 <x, y>``. The second form is what we evaluate;
it involves no cancellation. Moving both vectors by ``-R s`` keeps
``x - y`` fixed, so the phase distance is unchanged, while every coordinate
gap ``| |<x - r s, x_j>| - |<y - r s, x_j>| |`` is nonincreasing in ``r``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FrameSpec, as_vector, check_pair, inner
from .errors import DegeneratePair
from .phase_metric import TOL_DIST, min_phase_dist, optimal_phase, psi


@dataclass(frozen=True)
class OrthoPair:
    x_o: np.ndarray
    y_o: np.ndarray
    R: float
    psi_before: float
    psi_after: float
    swapped: bool = False

    def to_dict(self):
        return {
            "x_o": _vec_to_json(self.x_o),
            "y_o": _vec_to_json(self.y_o),
            "R": self.R,
            "psi_before": self.psi_before,
            "psi_after": self.psi_after,
            "swapped": self.swapped,
            "inner_product_abs": float(abs(inner(self.x_o, self.y_o))),
            "norm_y_o": float(np.linalg.norm(self.y_o)),
        }


def _vec_to_json(v):
    if np.iscomplexobj(v):
        return [[float(c.real), float(c.imag)] for c in v]
    return [float(c) for c in v]


def phase_align(x, y):
    """Return ``lam * y`` with ``<x, lam y>`` real and nonnegative."""
    x, y = check_pair(x, y)
    return optimal_phase(x, y) * y


def reduction_parameter(x, y_aligned, tol: float = 1e-12) -> float:
    """The root ``R`` in ``[0, 1/2]`` of ``<x - r(x+y), y - r(x+y)> = 0``."""
    x, y = check_pair(x, y_aligned)
    s_norm = np.linalg.norm(x + y)
    scale = max(np.linalg.norm(x), np.linalg.norm(y))
    if s_norm <= tol * scale or scale == 0:
        raise DegeneratePair("x + y vanishes (y = -x after alignment)")
    r = 0.5 * (1.0 - np.linalg.norm(x - y) / s_norm)
    return float(min(max(r, 0.0), 0.5))


def _reduced_vectors(x, y):
    # u = x - R s and v = y - R s written through d = x - y and the unit s.
    s = x + y
    d = x - y
    s_hat = s / np.linalg.norm(s)
    d_norm = np.linalg.norm(d)
    u = 0.5 * (d + d_norm * s_hat)
    v = 0.5 * (d_norm * s_hat - d)
    return u, v


def reduce_pair(frame: FrameSpec, x, y, tol_dist: float = TOL_DIST) -> OrthoPair:
    x = as_vector(frame, x)
    y = as_vector(frame, y)
    before = psi(frame, x, y, tol_dist)
    y = phase_align(x, y)
    R = reduction_parameter(x, y)
    u, v = _reduced_vectors(x, y)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    # ties (up to roundoff) keep u as the normalizer
    swapped = nv > nu * (1.0 + 1e-12)
    if swapped:
        u, v, nu = v, u, nv
    if nu <= tol_dist:
        raise DegeneratePair("reduced pair is numerically zero")
    x_o = u / nu
    y_o = v / nu
    after = psi(frame, x_o, y_o, tol_dist)
    return OrthoPair(x_o, y_o, R, before.ratio, after.ratio, bool(swapped))


@dataclass(frozen=True)
class MonotoneReport:
    r_grid: np.ndarray
    values: np.ndarray  # shape (m, len(r_grid))
    max_violation: float
    worst_index: int

    @property
    def per_coordinate_violation(self):
        if self.values.shape[1] < 2:
            return np.zeros(self.values.shape[0])
        return np.maximum(np.diff(self.values, axis=1).max(axis=1), 0.0)


def coordinate_gaps(frame: FrameSpec, x, y_aligned, r):
    """``f_j(r) = sqrt(mu_j) | |<x - r s, x_j>| - |<y - r s, x_j>| |`` for every j and every r."""
    x = as_vector(frame, x)
    y = as_vector(frame, y_aligned)
    t = frame.analysis_matrix
    a, b = t @ x, t @ y
    sc = a + b
    r = np.atleast_1d(np.asarray(r, dtype=float))
    return np.abs(np.abs(a[:, None] - r[None, :] * sc[:, None]) - np.abs(b[:, None] - r[None, :] * sc[:, None]))


def coordinate_gap_monotone(frame: FrameSpec, x, y_aligned, r_grid=None) -> MonotoneReport:
    """Sweep every coordinate gap over ``r_grid`` and report the largest upward step."""
    if r_grid is None:
        r_grid = np.linspace(0.0, 0.5, 101)
    r_grid = np.asarray(r_grid, dtype=float)
    vals = coordinate_gaps(frame, x, y_aligned, r_grid)
    if vals.shape[1] < 2:
        return MonotoneReport(r_grid, vals, 0.0, 0)
    steps = np.diff(vals, axis=1).max(axis=1)
    worst = int(np.argmax(steps))
    return MonotoneReport(r_grid, vals, float(max(steps[worst], 0.0)), worst)


def span_residual(x, y, *vectors) -> float:
    """Largest distance of ``vectors`` from ``span{x, y}``."""
    basis, _ = np.linalg.qr(np.column_stack([x, y]))
    out = 0.0
    for v in vectors:
        out = max(out, float(np.linalg.norm(v - basis @ (basis.conj().T @ v))))
    return out


def orthogonal_distance_defect(pair: OrthoPair) -> float:
    """``| min_phase_dist(x_o, y_o) - sqrt(1 + ||y_o||^2) |``."""
    dist = min_phase_dist(pair.x_o, pair.y_o).aligned_distance
    return abs(dist - float(np.sqrt(1.0 + np.linalg.norm(pair.y_o) ** 2)))
