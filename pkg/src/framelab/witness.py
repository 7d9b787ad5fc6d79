"""Explicit local-instability witnesses in C^n.

Along a ray ``z + alpha * d`` the phase distance to ``z`` shrinks only
linearly, ``>= |alpha| * ||P_{z-perp} d||``, so any direction whose magnitude
gap is ``O(alpha^2)`` drives psi to zero. Two constructions produce such
directions: rotating two basis coefficients of ``x`` by ``+i`` and ``-i``, and,
for a pair with all-real coefficients, perturbing ``z = a x + y`` by ``i y``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import FrameSpec, as_vector, inner
from .errors import HypothesisFail, NotABasis, PreconditionError, RegimeExceeded, ZeroVector
from .phase_metric import magnitude_gap, min_phase_dist

FIT_POINTS = 8
REAL_TOL = 1e-10
EXCLUDE_TOL = 1e-8


def perp_constant(x, y) -> float:
    """``||y - (<y, x> / ||x||^2) x||``: the linear rate of the phase distance along ``x + alpha y``."""
    x = np.asarray(x)
    y = np.asarray(y)
    nx2 = np.vdot(x, x).real
    if nx2 == 0:
        raise ZeroVector("projection onto span{x}^perp needs x != 0")
    return float(np.linalg.norm(y - (inner(y, x) / nx2) * x))


def _independent(x, y, rtol=1e-10):
    sv = np.linalg.svd(np.column_stack([x, y]), compute_uv=False)
    return sv[0] > 0 and sv[1] > rtol * sv[0]


def biorthogonal(frame: FrameSpec) -> np.ndarray:
    """Rows ``f_j`` with ``<f_i, e_j> = delta_ij`` for the effective basis ``e_j = sqrt(mu_j) x_j``."""
    if frame.m != frame.dim:
        raise NotABasis(f"need m = n, got m = {frame.m}, n = {frame.dim}")
    E = frame.effective_vectors  # rows e_j
    if np.linalg.cond(E) > 1e12:
        raise NotABasis("basis matrix is singular to working precision")
    # <f_i, e_j> = sum_k F[i, k] conj(E[j, k]) = (F @ E^H)[i, j]
    return np.linalg.inv(E.conj().T)


def cn_basis_witness(basis: FrameSpec, x, rel_tol: float = 1e-12) -> np.ndarray:
    """Direction ``y = i c_1 f_1 - i c_2 f_2`` built from the two largest coefficients of ``x``."""
    if not basis.is_complex:
        raise HypothesisFail("the basis witness needs the complex field")
    x = as_vector(basis, x)
    F = biorthogonal(basis)
    c = basis.analysis_matrix @ x
    mags = np.abs(c)
    order = np.argsort(-mags, kind="stable")
    if mags[order[0]] == 0 or mags[order[1]] <= rel_tol * mags[order[0]]:
        raise HypothesisFail("x is a scalar multiple of a single basis direction")
    j1, j2 = int(order[0]), int(order[1])
    y = 1j * c[j1] * F[j1] - 1j * c[j2] * F[j2]
    if not _independent(x, y):
        raise HypothesisFail("witness direction is dependent on x")
    return y


def _a_candidates():
    for k in itertools.count(1):
        yield float(k)
        yield float(-k)


def real_coeff_witness(frame: FrameSpec, x, y, seed: int = 0, max_scan: int | None = None):
    """Base point ``z = a x + y`` and direction ``i y`` for a pair with real coefficients.

    ``a`` runs through ``1, -1, 2, -2, ...`` and is accepted once no coefficient
    of ``z`` vanishes (below ``EXCLUDE_TOL``) where the coefficient of ``y`` is
    nonzero. If the scan is exhausted, seeded random reals are tried.
    """
    if not frame.is_complex:
        raise HypothesisFail("the real-coefficient witness lives in the complex field")
    x = as_vector(frame, x)
    y = as_vector(frame, y)
    if not _independent(x, y):
        raise HypothesisFail("x and y are linearly dependent")
    T = frame.analysis_matrix
    cx, cy = T @ x, T @ y
    scale = max(1.0, float(np.max(np.abs(cx))), float(np.max(np.abs(cy))))
    if np.max(np.abs(cx.imag)) > REAL_TOL * scale or np.max(np.abs(cy.imag)) > REAL_TOL * scale:
        raise HypothesisFail("frame coefficients of x and y are not all real")
    active = np.abs(cy) > EXCLUDE_TOL

    def ok(a):
        return bool(np.all(np.abs(a * cx[active] + cy[active]) > EXCLUDE_TOL))

    limit = max_scan if max_scan is not None else 2 * frame.m + 2
    for a in itertools.islice(_a_candidates(), limit):
        if ok(a):
            return a * x + y, 1j * y
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        a = float(rng.uniform(-10.0, 10.0))
        if a != 0 and ok(a):
            return a * x + y, 1j * y
    raise HypothesisFail("no admissible scalar a found")


@dataclass
class WitnessTrace:
    z: np.ndarray
    direction: np.ndarray
    alphas: np.ndarray
    numerators: np.ndarray
    denominators: np.ndarray
    c_lemma: float
    fitted_orders: tuple

    @property
    def ratios(self):
        return self.numerators / self.denominators

    @property
    def ratio_order(self) -> float:
        return self.fitted_orders[2]

    def to_dict(self):
        return {
            "alphas": self.alphas.tolist(),
            "numerators": self.numerators.tolist(),
            "denominators": self.denominators.tolist(),
            "ratios": self.ratios.tolist(),
            "c_lemma": self.c_lemma,
            "fitted_orders": {
                "numerator": self.fitted_orders[0],
                "denominator": self.fitted_orders[1],
                "ratio": self.fitted_orders[2],
            },
        }

    def to_csv(self) -> str:
        lines = ["alpha,numerator,denominator,ratio"]
        for a, nu, de, r in zip(self.alphas, self.numerators, self.denominators, self.ratios):
            lines.append(",".join(repr(float(v)) for v in (a, nu, de, r)))
        return "\n".join(lines) + "\n"


def fit_order(alphas, values, points: int = FIT_POINTS) -> float:
    """Slope of ``log(values)`` against ``log(alphas)`` over the last ``points`` entries."""
    a = np.asarray(alphas, dtype=float)[-points:]
    v = np.asarray(values, dtype=float)[-points:]
    keep = v > 0
    if keep.sum() < 2:
        return float("inf")  # identically zero: faster than any power
    return float(np.polyfit(np.log(a[keep]), np.log(v[keep]), 1)[0])


def default_alphas(count: int = 16):
    return 2.0 ** -np.arange(1, count + 1)


def trace_witness(frame: FrameSpec, z, direction, alphas=None) -> WitnessTrace:
    z = as_vector(frame, z)
    d = as_vector(frame, direction)
    if not _independent(z, d):
        raise PreconditionError("base point and direction must be linearly independent")
    alphas = default_alphas() if alphas is None else np.asarray(alphas, dtype=float)
    if np.any(alphas <= 0) or np.any(np.diff(alphas) >= 0):
        raise PreconditionError("alphas must be positive and strictly decreasing")
    num = np.array([magnitude_gap(frame, z, z + a * d) for a in alphas])
    den = np.array([min_phase_dist(z, z + a * d).aligned_distance for a in alphas])
    orders = (fit_order(alphas, num), fit_order(alphas, den), fit_order(alphas, num / den))
    return WitnessTrace(z, d, alphas, num, den, perp_constant(z, d), orders)


@dataclass(frozen=True)
class QuadraticBound:
    k: float
    max_violation: float
    alphas: np.ndarray
    holds: bool

    def to_dict(self):
        return {"k": self.k, "max_violation": self.max_violation, "holds": self.holds,
                "alphas": self.alphas.tolist()}


def verify_quadratic_bound(frame: FrameSpec, z, direction, alphas=None, abs_tol: float = 1e-12) -> QuadraticBound:
    """Check ``gap(z, z + alpha d) <= k alpha^2`` with ``k = (sum_I |<z,x_j>|^-2 |<d,x_j>|^4)^{1/2} / 2``.

    Valid for witness directions, where each ratio ``<d, x_j> / (i <z, x_j>)``
    is real. Raises :class:`RegimeExceeded` if some ``|beta_j| > 1``.
    """
    z = as_vector(frame, z)
    d = as_vector(frame, direction)
    alphas = default_alphas() if alphas is None else np.asarray(alphas, dtype=float)
    T = frame.analysis_matrix
    cz, cd = T @ z, T @ d
    scale = max(float(np.max(np.abs(cz))), float(np.max(np.abs(cd))), 1e-300)
    idx = np.flatnonzero(np.abs(cd) > 1e-14 * scale)
    if np.any(np.abs(cz[idx]) <= EXCLUDE_TOL * scale):
        raise HypothesisFail("a coefficient of z vanishes where the direction's does not")
    rate = cd[idx] / (1j * cz[idx])
    if np.any(np.abs(rate.imag) > 1e-8 * np.maximum(1.0, np.abs(rate))):
        raise HypothesisFail("direction is not a witness direction (coefficient ratios are not real)")
    amax = float(np.max(np.abs(rate))) if idx.size else 0.0
    if amax > 0 and np.any(alphas * amax > 1.0):
        raise RegimeExceeded(f"|beta_j| > 1 for alpha > {1.0 / amax:.6g}", alpha_cutoff=1.0 / amax)
    k = 0.5 * float(np.sqrt(np.sum(np.abs(cd[idx]) ** 4 / np.abs(cz[idx]) ** 2)))
    viol = np.array([magnitude_gap(frame, z, z + a * d) - k * a * a for a in alphas])
    worst = float(viol.max())
    return QuadraticBound(k, worst, alphas, worst <= abs_tol)
