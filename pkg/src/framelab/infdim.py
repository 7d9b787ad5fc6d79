"""Finite truncations of the infinite-dimensional instability constructions.

Two mechanisms are modeled:

* Riesz bases: flipping the sign of one coefficient of ``x`` with the dual
  vector, ``y = x - 2 <x, x_j0> g_j0``, leaves every coefficient magnitude
  unchanged. The flip moves ``x`` by ``2 |<x, x_j0>| ||g_j0||``, so a vector
  with a geometrically decaying tail has equal-magnitude partners arbitrarily
  close to it, while a finitely supported vector does not.
* Block systems: orthonormal ``z_0..z_K`` and disjoint index blocks
  ``Omega_0..Omega_K`` with
  (1) ``||T_{Omega_j} z_j|| >= 1``,
  (2) ``||T_{Omega_j^c} z_j|| <= 4^-j``,
  (3) ``||T_{Omega_i} z_j|| <= 4^-i / 2`` for ``i != j``.
  With ``x = sum 2^-j z_j`` and ``y`` flipping the sign of the ``z_k`` term,
  ``B min_lam ||x - lam y||^2 >= 2^(-2k-1) - 4^(-3k+1) - 4^(-2k+1)`` while
  ``gap(x, y)^2 <= 4^(-3k+1) + 4^(-2k+1)``, so psi decays like ``2^-k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import expm

from .core import Field, FrameSpec, as_vector, frame_bounds
from .errors import ConstructionFailed, OverlappingBlocks, PreconditionError, ZeroCoefficient, ZeroVector
from .phase_metric import magnitude_gap, min_phase_dist
from .witness import biorthogonal

COND_TOL = 1e-12


# ---------------------------------------------------------------- Riesz bases


def flip_witness(frame: FrameSpec, x, j0: int, zero_tol: float = 1e-14) -> np.ndarray:
    """``y = x - 2 <x, x_j0> g_j0`` where ``(g_j)`` is the dual basis."""
    x = as_vector(frame, x)
    G = biorthogonal(frame)
    c = frame.analysis_matrix @ x
    if abs(c[j0]) <= zero_tol * max(1.0, float(np.max(np.abs(c)))):
        raise ZeroCoefficient(f"coefficient {j0} of x vanishes; flipping it changes nothing")
    return x - 2.0 * c[j0] * G[j0]


def truncate_basis(frame: FrameSpec, N: int) -> FrameSpec:
    """First ``N`` vectors restricted to the first ``N`` coordinates."""
    return FrameSpec(frame.field, frame.vectors[:N, :N], frame.weights[:N], f"{frame.label}[:{N}]")


@dataclass
class FlipScaleReport:
    levels: list
    j0: list
    distances: list

    def to_dict(self):
        return {"levels": self.levels, "j0": self.j0, "distances": self.distances}


def finite_support_rate(frame: FrameSpec, x, levels=None, zero_tol: float = 1e-14) -> FlipScaleReport:
    """Distance to the nearest sign-flip partner of ``x`` at each truncation level.

    At level ``N`` the basis and ``x`` are cut to their first ``N`` coordinates;
    the flip is taken at the smallest nonzero coefficient. When ``x`` has a
    single nonzero coefficient the flip is ``-x`` (projectively equal), and the
    distance is reported as infinite.
    """
    x = as_vector(frame, x)
    if not np.any(x):
        raise ZeroVector("x = 0")
    levels = list(levels) if levels is not None else [frame.dim]
    out_j, out_d = [], []
    for N in levels:
        sub = truncate_basis(frame, N)
        xs = x[:N]
        c = sub.analysis_matrix @ xs
        mag = np.abs(c)
        nz = np.flatnonzero(mag > zero_tol * max(float(mag.max(initial=0.0)), 1e-300))
        if nz.size <= 1:
            out_j.append(None)
            out_d.append(math.inf)
            continue
        j0 = int(nz[np.argmin(mag[nz])])
        y = flip_witness(sub, xs, j0)
        out_j.append(j0)
        out_d.append(float(np.linalg.norm(xs - y)))
    return FlipScaleReport(levels, out_j, out_d)


def random_riesz_basis(n: int, cond: float, seed=0) -> FrameSpec:
    """Real basis whose matrix has singular values spread over ``[1, cond]``."""
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    V, _ = np.linalg.qr(rng.standard_normal((n, n)))
    s = np.geomspace(1.0, cond, n)
    return FrameSpec(Field.REAL, U @ np.diag(s) @ V.T, np.ones(n), f"riesz_{n}_cond{cond:g}_seed{seed}")


# -------------------------------------------------------------- block systems


@dataclass(frozen=True, eq=False)
class BlockSystem:
    frame: FrameSpec
    blocks: tuple  # tuple of tuples of frame indices
    z_seq: np.ndarray  # rows z_0 .. z_K
    margins: tuple = ()
    kind: str = ""
    weight_scale: float = 1.0

    @property
    def K(self) -> int:
        return self.z_seq.shape[0] - 1


@dataclass
class BlockCheck:
    margins: list  # per j: (||T_j z_j||, ||T_{j^c} z_j||, max_{i != j} ||T_i z_j|| 2 4^i)
    cond1: bool
    cond2: bool
    cond3: bool
    worst: tuple  # (min cond-1 norm, max cond-2 ratio to 4^-j, max cond-3 ratio to 4^-i/2)
    orthonormality_defect: float

    @property
    def ok(self) -> bool:
        return self.cond1 and self.cond2 and self.cond3 and self.orthonormality_defect <= 1e-10

    def to_dict(self):
        return {
            "margins": [list(m) for m in self.margins],
            "cond1": self.cond1,
            "cond2": self.cond2,
            "cond3": self.cond3,
            "worst": list(self.worst),
            "orthonormality_defect": self.orthonormality_defect,
            "ok": self.ok,
        }


def _restricted_norm(frame, idx, v):
    T = frame.analysis_matrix
    if len(idx) == 0:
        return 0.0
    return float(np.linalg.norm(T[list(idx)] @ v))


def _complement(frame, idx):
    mask = np.ones(frame.m, dtype=bool)
    mask[list(idx)] = False
    return np.flatnonzero(mask)


def verify_blocks(system: BlockSystem) -> BlockCheck:
    """Evaluate conditions (1)-(3) with exact restricted norms.

    ``margins[j]`` holds ``(||T_{Omega_j} z_j||, ||T_{Omega_j^c} z_j||,
    max_{i != j} ||T_{Omega_i} z_j|| / (4^-i / 2))``.
    """
    seen = set()
    for b in system.blocks:
        if seen.intersection(b):
            raise OverlappingBlocks(f"index {sorted(seen.intersection(b))[0]} lies in two blocks")
        seen.update(b)
    fr = system.frame
    Z = system.z_seq
    K = system.K
    margins = []
    c1 = c2 = c3 = True
    w1, w2, w3 = math.inf, 0.0, 0.0
    for j in range(K + 1):
        inside = _restricted_norm(fr, system.blocks[j], Z[j])
        outside = _restricted_norm(fr, _complement(fr, system.blocks[j]), Z[j])
        cross = 0.0
        for i in range(K + 1):
            if i != j:
                cross = max(cross, _restricted_norm(fr, system.blocks[i], Z[j]) / (0.5 * 4.0 ** -i))
        margins.append((inside, outside, cross))
        c1 &= inside >= 1.0 - COND_TOL
        c2 &= outside <= 4.0 ** -j + COND_TOL
        c3 &= cross <= 1.0 + COND_TOL
        w1 = min(w1, inside)
        w2 = max(w2, outside / 4.0 ** -j)
        w3 = max(w3, cross)
    G = Z.conj() @ Z.T
    defect = float(np.max(np.abs(G - np.eye(K + 1))))
    return BlockCheck(margins, bool(c1), bool(c2), bool(c3), (w1, w2, w3), defect)


def build_pair(system: BlockSystem, k: int, start: int = 1):
    """``x = z_0 + sum_{j >= start} 2^-j z_j`` and ``y`` equal to ``x`` with the ``z_k`` term negated.

    ``start = 1`` gives the full sum; larger ``start`` gives the base points
    that accumulate at ``z_0``.
    """
    K = system.K
    if not (2 <= k <= K) or k < start:
        raise PreconditionError(f"k must satisfy max(2, start) <= k <= K = {K}, got k = {k}")
    coeff = np.array([1.0] + [2.0 ** -j if j >= start else 0.0 for j in range(1, K + 1)])
    x = coeff @ system.z_seq
    ycoeff = coeff.copy()
    ycoeff[k] = -ycoeff[k]
    return x, ycoeff @ system.z_seq


def chain_bounds(k: int):
    """Closed-form lower bound on ``B dist^2`` and upper bound on ``gap^2``."""
    lower = 2.0 ** (-2 * k - 1) - 4.0 ** (-3 * k + 1) - 4.0 * 4.0 ** (-2 * k)
    upper = 4.0 ** (-3 * k + 1) + 4.0 ** (-2 * k + 1)
    return lower, upper


@dataclass
class ChainReport:
    k: int
    dist_sq_lower: float
    gap_sq_upper: float
    measured_dist_sq: float
    measured_gap_sq: float
    B: float
    lower_block_norm: float  # ||T_{Omega_k^c} sum_{j != k} 2^-j z_j||, must exceed 1
    start: int = 1

    @property
    def chain_ok(self) -> bool:
        return (self.B * self.measured_dist_sq >= self.dist_sq_lower - 1e-12
                and self.measured_gap_sq <= self.gap_sq_upper + 1e-12)

    @property
    def lower_block_ok(self) -> bool:
        return self.lower_block_norm > 1.0

    @property
    def ratio(self) -> float:
        return math.sqrt(self.measured_gap_sq / self.measured_dist_sq)

    @property
    def envelope(self) -> float:
        return math.sqrt(self.gap_sq_upper * self.B / self.dist_sq_lower)

    def to_dict(self):
        return {
            "k": self.k,
            "start": self.start,
            "dist_sq_lower": self.dist_sq_lower,
            "B_times_measured_dist_sq": self.B * self.measured_dist_sq,
            "gap_sq_upper": self.gap_sq_upper,
            "measured_gap_sq": self.measured_gap_sq,
            "B": self.B,
            "ratio": self.ratio,
            "envelope": self.envelope,
            "lower_block_norm": self.lower_block_norm,
            "chain_ok": self.chain_ok,
        }


def verify_chains(system: BlockSystem, k: int, start: int = 1, check: BlockCheck | None = None) -> ChainReport:
    check = check or verify_blocks(system)
    if not check.ok:
        raise PreconditionError("block system fails conditions (1)-(3)")
    x, y = build_pair(system, k, start)
    fr = system.frame
    B = frame_bounds(fr).upper
    dist = min_phase_dist(x, y).aligned_distance
    gap = magnitude_gap(fr, x, y)
    rest = x - 2.0 ** -k * system.z_seq[k]
    lower_norm = _restricted_norm(fr, _complement(fr, system.blocks[k]), rest)
    lo, hi = chain_bounds(k)
    return ChainReport(k, lo, hi, dist * dist, gap * gap, B, lower_norm, start)


def _graded_noise(rng, K, N, scale):
    """Entries ``scale * u * 4^-max(i, j)`` with ``u`` uniform in [-1, 1]."""
    rows = np.arange(K + 1)[:, None]
    cols = np.arange(N)[None, :]
    return scale * rng.uniform(-1.0, 1.0, (K + 1, N)) * 4.0 ** -np.maximum(rows, cols)


def _scaled_to(frame, target_A):
    A = frame_bounds(frame).lower
    s = target_A / A
    return frame.with_weights(frame.weights * s), s


def make_block_system(kind: str, N: int, K: int, seed=0, perturbation: float = 0.05,
                      target_A: float = 1.25, retries: int = 8) -> BlockSystem:
    """Explicit block systems in R^N satisfying conditions (1)-(3).

    ``onb``: standard basis, ``z_j = e_j``, ``Omega_j = {j}``.
    ``two_onb``: ``{e_j} U {Q e_j}`` for a seeded rotation ``Q = Q_tail exp(S)``,
    where ``S`` is skew with entries decaying like ``4^-max(i, j)`` and
    ``Q_tail`` is a Haar rotation of coordinates ``K+1 .. N-1``;
    ``z_j = e_j`` and ``Omega_j`` holds ``e_j`` and its best-aligned rotated partner.
    ``perturbed``: standard basis with ``z_j`` the Gram-Schmidt orthonormalization
    of ``e_j`` plus graded noise.
    The redundant kinds have weights rescaled so the lower frame bound equals
    ``target_A > 1``. Each attempt is checked with :func:`verify_blocks`; after
    ``retries`` failures (halving the perturbation each time) the constructor
    raises :class:`ConstructionFailed`.
    """
    if N < 2 * (K + 1):
        raise PreconditionError(f"need N >= 2(K + 1) = {2 * (K + 1)}, got N = {N}")
    if kind == "onb":
        fr = FrameSpec(Field.REAL, np.eye(N), np.ones(N), f"onb{N}")
        sys_ = BlockSystem(fr, tuple((j,) for j in range(K + 1)), np.eye(N)[:K + 1], kind=kind)
        check = verify_blocks(sys_)
        if not check.ok:
            raise ConstructionFailed("standard basis failed block conditions", check.margins)
        return replace(sys_, margins=tuple(check.margins))
    if kind not in ("two_onb", "perturbed"):
        raise PreconditionError(f"unknown block system kind {kind!r}")
    rng = np.random.default_rng(seed)
    eps = perturbation
    last = None
    for _ in range(retries):
        if kind == "two_onb":
            G = _graded_noise(rng, K, N, eps)
            S = np.zeros((N, N))
            S[:K + 1, :] = G
            S = np.triu(S, 1)
            S = S - S.T
            Qt, _ = np.linalg.qr(rng.standard_normal((N - K - 1, N - K - 1)))
            tail = np.eye(N)
            tail[K + 1:, K + 1:] = Qt
            Q = tail @ expm(S)
            vecs = np.vstack([np.eye(N), Q.T])  # row N + p is Q e_p
            fr = FrameSpec(Field.REAL, vecs, np.full(2 * N, 0.5), f"two_onb{N}")
            fr, s = _scaled_to(fr, target_A)
            partner = np.argmax(np.abs(Q[:K + 1, :]), axis=1)
            blocks = tuple((j, N + int(partner[j])) for j in range(K + 1))
            Z = np.eye(N)[:K + 1]
        else:
            P = np.eye(N)[:K + 1] + _graded_noise(rng, K, N, eps)
            Zq, R = np.linalg.qr(P.T)
            Z = (Zq * np.sign(np.diag(R))).T
            fr = FrameSpec(Field.REAL, np.eye(N), np.ones(N), f"perturbed{N}")
            fr, s = _scaled_to(fr, target_A)
            blocks = tuple((j,) for j in range(K + 1))
        sys_ = BlockSystem(fr, blocks, Z, kind=kind, weight_scale=s)
        if len({b for blk in blocks for b in blk}) != sum(len(b) for b in blocks):
            eps *= 0.5
            continue
        check = verify_blocks(sys_)
        if check.ok:
            return replace(sys_, margins=tuple(check.margins))
        last = check
        eps *= 0.5
    raise ConstructionFailed(f"{kind} block system failed conditions after {retries} attempts",
                             last.margins if last else None)
