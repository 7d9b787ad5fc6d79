"""Local stability near a fixed vector.

For a real frame with lower bound A and any ``x != 0``, every ``y`` with
``||x - y|| < beta`` keeps the sign of each nonzero coefficient of ``x``, where
``beta = min_{j in J_x} |<x, x_j>| / ||x_j||``. Inside that ball the magnitude
gap dominates ``sqrt(A) ||x - y||``. For discretized continuous frames the
same argument runs with the indices whose coefficient falls below
``alpha ||x_j||`` treated as a tail whose operator norm is made small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import FrameSpec, as_vector, frame_bounds, random_unit
from .errors import PreconditionError, RadiusExceeded, ZeroVector
from .phase_metric import magnitude_gap, min_phase_dist

ZERO_TOL = 1e-12


@dataclass
class LocalReport:
    x: np.ndarray
    beta: float
    A: float
    support: tuple
    empirical_local_inf: float | None = None
    radii_schedule: list = field(default_factory=list)
    per_radius_min: list = field(default_factory=list)

    @property
    def constant(self) -> float:
        return 1.0 / math.sqrt(self.A) if self.A > 0 else math.inf

    @property
    def trend(self) -> list:
        """Ratios of successive per-radius minima (about 1 for no decay, 1/2 for linear decay at halving radii)."""
        m = self.per_radius_min
        return [m[k + 1] / m[k] if m[k] > 0 else math.nan for k in range(len(m) - 1)]

    def to_dict(self):
        return {
            "beta": self.beta,
            "A": self.A,
            "constant": self.constant,
            "support": list(self.support),
            "empirical_local_inf": self.empirical_local_inf,
            "empirical_local_inf_note": "sampled upper bound on the local infimum",
            "radii_schedule": list(self.radii_schedule),
            "per_radius_min": list(self.per_radius_min),
            "trend": self.trend,
        }

    def to_csv(self) -> str:
        lines = ["radius,min_ratio"]
        lines += [f"{float(r)!r},{float(v)!r}" for r, v in zip(self.radii_schedule, self.per_radius_min)]
        return "\n".join(lines) + "\n"


def _coefficients(frame, x):
    """Unweighted ``<x, x_j>`` and ``||x_j||``."""
    return frame.vectors.conj() @ x, np.linalg.norm(frame.vectors, axis=1)


def local_radius(frame: FrameSpec, x, zero_tol: float = ZERO_TOL) -> LocalReport:
    x = as_vector(frame, x)
    nx = np.linalg.norm(x)
    if nx == 0:
        raise ZeroVector("local radius is undefined at x = 0")
    coef, vn = _coefficients(frame, x)
    support = np.flatnonzero(np.abs(coef) > zero_tol * nx * vn)
    bounds = frame_bounds(frame)
    if support.size == 0:
        raise PreconditionError("x is orthogonal to every frame vector; the family does not span")
    beta = float(np.min(np.abs(coef[support]) / vn[support]))
    return LocalReport(x, beta, bounds.lower, tuple(int(j) for j in support))


@dataclass(frozen=True)
class LocalBoundCheck:
    holds: bool
    slack: float
    signs_preserved: bool
    distance: float
    gap: float
    A: float

    def to_dict(self):
        return dict(self.__dict__)


def local_bound_check(frame: FrameSpec, x, y, zero_tol: float = ZERO_TOL, slack_tol: float = 1e-9) -> LocalBoundCheck:
    """Check ``min_phase_dist(x, y) <= A^{-1/2} gap(x, y)`` for ``||x - y|| < beta``."""
    if frame.is_complex:
        raise PreconditionError("the local bound inside the beta-ball is a real-field statement")
    x = as_vector(frame, x)
    y = as_vector(frame, y)
    rep = local_radius(frame, x, zero_tol)
    step = float(np.linalg.norm(x - y))
    if not step < rep.beta:
        raise RadiusExceeded(f"||x - y|| = {step:.6g} is not below beta = {rep.beta:.6g}")
    sup = list(rep.support)
    cx, _ = _coefficients(frame, x)
    cy, _ = _coefficients(frame, y)
    signs = bool(np.all(np.sign(cx[sup]) == np.sign(cy[sup])))
    dist = min_phase_dist(x, y).aligned_distance
    gap = magnitude_gap(frame, x, y)
    slack = gap / math.sqrt(rep.A) - dist
    return LocalBoundCheck(slack >= -slack_tol, float(slack), signs, dist, gap, rep.A)


@dataclass(frozen=True)
class TailReport:
    alpha: float
    omega: tuple
    tail_norm: float

    def to_dict(self):
        return {"alpha": self.alpha, "omega": list(self.omega), "tail_norm": self.tail_norm}


def tail_norm(frame: FrameSpec, x, alpha: float, include_orthogonal: bool = False,
              zero_tol: float = ZERO_TOL) -> TailReport:
    """Operator norm of the analysis map restricted to ``{j : |<x, x_j>| < alpha ||x_j||}``.

    With ``include_orthogonal`` the indices where ``<x, x_j> = 0`` (at
    ``zero_tol``) are kept out of the tail: on them the gap identity holds
    exactly, so they never need to be small.
    """
    if not alpha > 0:
        raise PreconditionError("alpha must be positive")
    x = as_vector(frame, x)
    nx = np.linalg.norm(x)
    if nx == 0:
        raise ZeroVector("tail norm is undefined at x = 0")
    coef, vn = _coefficients(frame, x)
    good = np.abs(coef) >= alpha * vn
    if include_orthogonal:
        good |= np.abs(coef) <= zero_tol * nx * vn
    rows = frame.effective_vectors[~good]
    tn = float(np.linalg.norm(rows, 2)) if rows.shape[0] else 0.0
    return TailReport(float(alpha), tuple(int(j) for j in np.flatnonzero(good)), tn)


@dataclass(frozen=True)
class TailRadius:
    beta: float
    tail: TailReport
    epsilon: float
    A: float
    samples: int = 0
    violations: int = 0
    worst_margin: float | None = None

    def to_dict(self):
        return {
            "beta": self.beta,
            "tail": self.tail.to_dict(),
            "epsilon": self.epsilon,
            "A": self.A,
            "samples": self.samples,
            "violations": self.violations,
            "worst_margin": self.worst_margin,
        }


def choose_tail_radius(frame: FrameSpec, x, epsilon: float, verify_samples: int = 0, seed: int = 0,
                       max_halvings: int = 200) -> TailRadius:
    """Halve ``alpha`` from ``||x||`` until the squared tail norm drops below ``epsilon``.

    For real frames, every ``y`` with ``||x - y|| < beta`` then satisfies
    ``gap(x, y)^2 >= (A - epsilon) ||x - y||^2``; ``verify_samples`` draws
    that many ``y`` uniformly from the ball and counts violations.
    """
    A = frame_bounds(frame).lower
    if not 0 < epsilon < A:
        raise PreconditionError(f"epsilon must lie in (0, A) = (0, {A:.6g}), got {epsilon!r}")
    x = as_vector(frame, x)
    alpha = float(np.linalg.norm(x))
    if alpha == 0:
        raise ZeroVector("tail radius is undefined at x = 0")
    for _ in range(max_halvings):
        rep = tail_norm(frame, x, alpha, include_orthogonal=True)
        if rep.tail_norm ** 2 < epsilon:
            break
        alpha *= 0.5
    else:
        raise PreconditionError("tail norm did not fall below epsilon")
    out = TailRadius(alpha, rep, float(epsilon), A)
    if verify_samples and not frame.is_complex:
        rng = np.random.default_rng(seed)
        n = frame.dim
        d = rng.standard_normal((verify_samples, n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = alpha * rng.uniform(0.0, 1.0, verify_samples) ** (1.0 / n)
        Y = x[None, :] + r[:, None] * d
        T = frame.analysis_matrix
        gap2 = np.sum((np.abs(T @ x)[None, :] - np.abs(Y @ T.T)) ** 2, axis=1)
        margin = gap2 - (A - epsilon) * r ** 2
        out = TailRadius(alpha, rep, float(epsilon), A, verify_samples,
                         int(np.sum(margin < -1e-12 * max(1.0, A))), float(margin.min()))
    return out


def default_radii(beta: float, count: int = 21):
    """``r_k = 2^-k * beta / 2`` for ``k = 0 .. count - 1``."""
    return [beta * 0.5 * 2.0 ** (-k) for k in range(count)]


def _psi_rows(T, x, Y):
    gap = np.linalg.norm(np.abs(T @ x)[None, :] - np.abs(Y @ T.T), axis=1)
    ip = Y.conj() @ x  # <x, y_k>
    if np.iscomplexobj(Y):
        a = np.abs(ip)
        lam = np.where(a > 0, ip / np.where(a > 0, a, 1.0), 1.0)
    else:
        lam = np.where(ip < 0, -1.0, 1.0)
    dist = np.linalg.norm(x[None, :] - lam[:, None] * Y, axis=1)
    return gap / dist


def local_ratio_profile(frame: FrameSpec, x, n_dirs: int = 64, radii=None, seed: int = 0,
                        extra_directions=(), zero_tol: float = ZERO_TOL) -> LocalReport:
    """Minimum of ``psi(x, x + r d)`` over sampled unit directions, per radius.

    Direction ``i`` is drawn from the ``i``-th child of ``SeedSequence(seed)``;
    ``extra_directions`` (e.g. instability witnesses) are appended after the
    random ones and normalized.
    """
    rep = local_radius(frame, x, zero_tol)
    x = rep.x
    if radii is None:
        radii = default_radii(rep.beta)
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0 or np.any(radii <= 0) or np.any(np.diff(radii) >= 0):
        raise PreconditionError("radii must be positive and strictly decreasing")
    dirs = [random_unit(np.random.default_rng(s), frame.dim, frame.field)
            for s in np.random.SeedSequence(seed).spawn(n_dirs)]
    for d in extra_directions:
        d = as_vector(frame, d)
        dirs.append(d / np.linalg.norm(d))
    T = frame.analysis_matrix
    mins = np.full(radii.shape, np.inf)
    for d in dirs:
        Y = x[None, :] + radii[:, None] * d[None, :]
        mins = np.minimum(mins, _psi_rows(T, x, Y))
    rep.radii_schedule = [float(r) for r in radii]
    rep.per_radius_min = [float(v) for v in mins]
    rep.empirical_local_inf = float(mins[-1])
    return rep
