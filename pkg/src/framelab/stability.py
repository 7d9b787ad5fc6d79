"""Global stability constant over the compact set of orthogonal pairs.

Every pair reduces to an orthogonal pair ``(x, y)`` with ``||x|| = 1`` and
``||y|| <= 1`` without increasing psi, and on that set the phase distance is
simply ``sqrt(1 + ||y||^2)``. The optimal stability constant is therefore
``1 / min psi`` over a compact set, which is what :func:`estimate_stability`
searches (multistart, derivative-free) and :func:`oracle_stability_dim2`
enumerates by brute force in dimension two.

For real frames, stable phase retrieval is decided exactly by the complement
property; :func:`complement_property` checks it by exhaustive subset scan and
:func:`pr_failure_witness` turns a violating split into an explicit
orthogonal pair with identical magnitudes.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .core import FrameSpec, frame_bounds
from .errors import (
    DegeneratePair,
    DegenerateWitness,
    DimensionMismatch,
    FieldUnsupported,
    FramelabError,
    NotAFrame,
    PreconditionError,
    TooLarge,
)
from .ortho_reduce import OrthoPair, _vec_to_json, reduce_pair
from .phase_metric import psi_on_compact

TOL_ZERO = 1e-6
TOL_INCONCLUSIVE = 1e-4
STEP_START = 0.1
STEP_MIN = 1e-6
CP_MAX_M = 22
SPLIT_SEEDS = 4  # screened samples that also seed the alternating descent (real field)


@dataclass(frozen=True)
class CompactPoint:
    """A point of ``X = {(x, y): ||x|| = 1, ||y|| <= 1, <x, y> = 0}``."""

    x: np.ndarray
    y: np.ndarray

    def to_dict(self):
        return {"x": _vec_to_json(self.x), "y": _vec_to_json(self.y)}


@dataclass(frozen=True)
class StabilityBudget:
    n_starts: int = 32
    grid_density: int = 64  # random screening samples per start; per-axis density for the oracle
    refine_iters: int = 3000


@dataclass
class StabilityReport:
    inf_psi_estimate: float
    argmin: CompactPoint
    n_starts: int
    n_evals: int
    seed: int
    verdict: str
    oracle_value: float | None = None
    per_start: list = field(default_factory=list)

    @property
    def C_estimate(self) -> float:
        if self.inf_psi_estimate <= TOL_ZERO:
            return math.inf
        return 1.0 / self.inf_psi_estimate

    def to_dict(self):
        return {
            "inf_psi_estimate": self.inf_psi_estimate,
            "C_estimate": self.C_estimate,
            "argmin": self.argmin.to_dict(),
            "n_starts": self.n_starts,
            "n_evals": self.n_evals,
            "seed": self.seed,
            "verdict": self.verdict,
            "oracle_value": self.oracle_value,
            "per_start_psi": list(self.per_start),
        }


# ------------------------------------------------------------ batched psi on X


def _project(X, Y):
    """Map rows of (X, Y) back onto the compact set."""
    X = X / np.linalg.norm(X, axis=1, keepdims=True)
    ip = np.sum(Y * X.conj(), axis=1, keepdims=True)
    Y = Y - ip * X
    ny = np.linalg.norm(Y, axis=1, keepdims=True)
    Y = np.where(ny > 1.0, Y / np.maximum(ny, 1.0), Y)
    return X, Y


def _psi_batch(T, X, Y):
    gap = np.linalg.norm(np.abs(X @ T.T) - np.abs(Y @ T.T), axis=1)
    return gap / np.sqrt(1.0 + np.sum(np.abs(Y) ** 2, axis=1))


class _Packer:
    """Real coordinates for (x, y) so the pattern search can step in each one."""

    def __init__(self, n, is_complex):
        self.n = n
        self.is_complex = is_complex
        self.size = 4 * n if is_complex else 2 * n

    def pack(self, x, y):
        if self.is_complex:
            return np.concatenate([x.real, x.imag, y.real, y.imag])
        return np.concatenate([x, y])

    def unpack(self, Z):
        n = self.n
        if self.is_complex:
            return Z[..., :n] + 1j * Z[..., n:2 * n], Z[..., 2 * n:3 * n] + 1j * Z[..., 3 * n:]
        return Z[..., :n], Z[..., n:]


def sample_compact(rng, n, size, is_complex):
    """Uniform x on the sphere, uniform unit w in x-perp, rho uniform on [0, 1]."""
    def gauss():
        g = rng.standard_normal((size, n))
        if is_complex:
            g = g + 1j * rng.standard_normal((size, n))
        return g

    X = gauss()
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    W = gauss()
    W -= np.sum(W * X.conj(), axis=1, keepdims=True) * X
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    rho = rng.uniform(0.0, 1.0, size=(size, 1))
    return X, rho * W


def _pattern_search(T, packer, x, y, max_iters):
    """Best-coordinate descent with step halving from STEP_START to STEP_MIN."""
    z = packer.pack(x, y)
    f = float(_psi_batch(T, x[None], y[None])[0])
    moves = np.vstack([np.eye(packer.size), -np.eye(packer.size)])
    step = STEP_START
    evals = 1
    it = 0
    while step >= STEP_MIN and it < max_iters:
        it += 1
        X, Y = _project(*packer.unpack(z[None, :] + step * moves))
        vals = _psi_batch(T, X, Y)
        evals += len(vals)
        k = int(np.argmin(vals))
        if vals[k] < f:
            f = float(vals[k])
            z = packer.pack(X[k], Y[k])
        else:
            step *= 0.5
    x, y = packer.unpack(z)
    return x, y, f, evals


def _polish(frame, packer, x, y):
    """Least-squares polish on general pairs, mapped back to X by the orthogonal reduction.

    The residuals ``(|Tx| - |Ty|) / dist(x, y)`` are smooth away from vanishing
    coefficients, so Gauss-Newton converges fast to exact zeros that the
    pattern search only approaches at its final step size.
    """
    T = frame.analysis_matrix

    def resid(z):
        a, b = packer.unpack(z)
        ip = np.vdot(b, a)
        lam = ip / abs(ip) if abs(ip) > 0 else 1.0
        if not packer.is_complex:
            lam = 1.0 if ip >= 0 else -1.0
        den = np.linalg.norm(a - lam * b)
        return (np.abs(T @ a) - np.abs(T @ b)) / max(den, 1e-300)

    z0 = packer.pack(x, y)
    try:
        sol = least_squares(resid, z0, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=50 * packer.size)
        a, b = packer.unpack(sol.x)
        pair = reduce_pair(frame, a, b)
    except (FramelabError, ValueError, np.linalg.LinAlgError):
        return None
    return pair.x_o, pair.y_o, sol.nfev


def _split_value(T, side):
    lo = np.linalg.eigvalsh(T[side].T @ T[side])[0] if side.any() else 0.0
    hi = np.linalg.eigvalsh(T[~side].T @ T[~side])[0] if not side.all() else 0.0
    return lo + hi


def _split_descent(T, x, y, max_rounds=64):
    """Alternating descent for real frames.

    With ``p = x + y`` and ``q = x - y`` of equal norm, ``| |a| - |b| | =
    min(|a - b|, |a + b|)`` gives ``psi^2 = sum_j min(<p, x_j>^2, <q, x_j>^2)``.
    Fixing which of the two terms each index takes, the best unit ``p`` and
    ``q`` are bottom eigenvectors of the two partial frame operators and the
    value is the sum of their smallest eigenvalues. We alternate between
    reassigning indices and recomputing ``p, q``, then try single-index moves
    between the two sides, and repeat while anything improves.
    """
    p, q = x + y, x - y
    p /= np.linalg.norm(p)
    nq = np.linalg.norm(q)
    q = q / nq if nq > 0 else p.copy()
    side = (T @ p) ** 2 <= (T @ q) ** 2
    best = _split_value(T, side)
    for _ in range(max_rounds):
        improved = False
        for _ in range(max_rounds):
            p = np.linalg.eigh(T[side].T @ T[side])[1][:, 0]
            q = np.linalg.eigh(T[~side].T @ T[~side])[1][:, 0]
            new = (T @ p) ** 2 <= (T @ q) ** 2
            val = _split_value(T, new)
            if np.array_equal(new, side) or not val < best:
                break
            side, best, improved = new, val, True
        flips = []
        for j in range(len(side)):
            trial = side.copy()
            trial[j] = not trial[j]
            flips.append(_split_value(T, trial))
        j = int(np.argmin(flips))
        if flips[j] < best * (1 - 1e-12):
            side[j] = not side[j]
            best, improved = flips[j], True
        if not improved:
            break
    p = np.linalg.eigh(T[side].T @ T[side])[1][:, 0]
    q = np.linalg.eigh(T[~side].T @ T[~side])[1][:, 0]
    x, y = 0.5 * (p + q), 0.5 * (p - q)
    if np.linalg.norm(y) > np.linalg.norm(x):
        x, y = y, x  # psi is symmetric in the pair
    nx = np.linalg.norm(x)
    x, y = x / nx, y / nx
    y = y - np.dot(y, x) * x
    return x, y, float(_psi_batch(T, x[None], y[None])[0])


def _run_start(frame, budget, seed_seq):
    rng = np.random.default_rng(seed_seq)
    T = frame.analysis_matrix
    packer = _Packer(frame.dim, frame.is_complex)
    X, Y = sample_compact(rng, frame.dim, max(budget.grid_density, 1), frame.is_complex)
    vals = _psi_batch(T, X, Y)
    k = int(np.argmin(vals))
    x, y, f, evals = _pattern_search(T, packer, X[k], Y[k], budget.refine_iters)
    evals += len(vals)
    if not frame.is_complex:
        for i in list(np.argsort(vals, kind="stable")[:SPLIT_SEEDS]):
            sx, sy, sf = _split_descent(T, X[i], Y[i])
            evals += 1
            if sf < f:
                x, y, f = sx, sy, sf
    polished = _polish(frame, packer, x, y)
    if polished is not None:
        px, py, nfev = polished
        evals += nfev
        pf = float(_psi_batch(T, px[None], py[None])[0])
        if pf < f:
            x, y, f = px, py, pf
    return f, x, y, evals


def _verdict(best, oracle):
    if oracle is not None:
        best = min(best, oracle)
    if best <= TOL_ZERO:
        return "unstable"
    if best > TOL_INCONCLUSIVE or oracle is not None:
        return "stable"
    return "inconclusive"


def estimate_stability(frame: FrameSpec, budget: StabilityBudget | None = None, seed: int = 0,
                       workers: int | None = None, oracle: bool = False) -> StabilityReport:
    """Multistart estimate of ``inf psi`` over X, and ``C = 1 / inf psi``.

    Start ``i`` owns the ``i``-th child of ``SeedSequence(seed)``, so the result
    does not depend on ``workers``. The reported value is an upper bound on the
    true infimum; no global-optimality certificate is claimed.
    """
    budget = budget or StabilityBudget()
    if not frame_bounds(frame).is_frame:
        raise NotAFrame("frame operator is singular (lower frame bound 0)")
    n = frame.dim
    T = frame.analysis_matrix
    if n == 1:
        # X has only y = 0; psi(x, 0) = ||Tx|| for |x| = 1
        x = np.ones(1, dtype=frame.field.dtype)
        y = np.zeros(1, dtype=frame.field.dtype)
        f = float(_psi_batch(T, x[None], y[None])[0])
        return StabilityReport(f, CompactPoint(x, y), budget.n_starts, 1, seed, _verdict(f, None), None, [f])

    children = np.random.SeedSequence(seed).spawn(budget.n_starts)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: _run_start(frame, budget, s), children))
    else:
        results = [_run_start(frame, budget, s) for s in children]

    best = min(range(len(results)), key=lambda i: (results[i][0], i))
    _, x, y, _ = results[best]
    inf_psi = psi_on_compact(frame, x, y)
    n_evals = sum(r[3] for r in results)
    oracle_value = None
    if oracle:
        if n != 2:
            raise DimensionMismatch("the brute-force oracle is only available for dim = 2")
        oracle_value = oracle_stability_dim2(frame, max(budget.grid_density, 64))
    return StabilityReport(inf_psi, CompactPoint(x, y), budget.n_starts, n_evals, seed,
                           _verdict(inf_psi, oracle_value), oracle_value, [r[0] for r in results])


# ----------------------------------------------------------- dim-2 oracle


def _chart_dim2(params, is_complex):
    """Chart of X in dimension 2.

    real: ``x = (cos t, sin t)``, ``y = rho (-sin t, cos t)``, t in [0, pi), rho in [0, 1].
    complex: ``x = (cos a, e^{i phi} sin a)``, ``y = rho (-sin a, e^{i phi} cos a)`` with
    a in [0, pi/2], phi in [0, 2 pi), rho in [0, 1]. The global phases of x and y
    are dropped: psi does not depend on them.
    """
    if not is_complex:
        t, rho = params
        c, s = np.cos(t), np.sin(t)
        return np.stack([c, s], -1), rho[..., None] * np.stack([-s, c], -1)
    a, phi, rho = params
    c, s, e = np.cos(a), np.sin(a), np.exp(1j * phi)
    X = np.stack([c + 0j, e * s], -1)
    W = np.stack([-s + 0j, e * c], -1)
    return X, rho[..., None] * W


def _grid_eval(T, axes, is_complex, chunk=1 << 18):
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = [g.reshape(-1) for g in mesh]
    out = np.empty(flat[0].shape[0])
    for lo in range(0, out.shape[0], chunk):
        X, Y = _chart_dim2([f[lo:lo + chunk] for f in flat], is_complex)
        out[lo:lo + chunk] = _psi_batch(T, X, Y)
    return out.reshape(mesh[0].shape), mesh


def oracle_stability_dim2(frame: FrameSpec, grid_density: int = 256, zoom_levels: int = 6,
                          zoom_seeds: int = 8) -> float:
    """Brute-force ``min psi`` over a dense chart of X for ``dim = 2``.

    A full tensor grid with ``grid_density`` points per axis is followed by
    nested zoom grids around the ``zoom_seeds`` best cells, each level shrinking
    the window by 4. Independent of the optimizer in :func:`estimate_stability`.
    """
    if frame.dim != 2:
        raise DimensionMismatch(f"oracle requires dim = 2, got {frame.dim}")
    T = frame.analysis_matrix
    is_c = frame.is_complex
    lo = np.array([0.0, 0.0, 0.0] if is_c else [0.0, 0.0])
    hi = np.array([np.pi / 2, 2 * np.pi, 1.0] if is_c else [np.pi, 1.0])
    periodic = [False, True, False] if is_c else [True, False]
    d = int(grid_density)
    axes = [np.linspace(lo[k], hi[k], d, endpoint=not periodic[k]) for k in range(len(lo))]
    vals, mesh = _grid_eval(T, axes, is_c)
    best = float(vals.min())
    order = np.argsort(vals, axis=None)[:zoom_seeds]
    width = (hi - lo) / d
    pts = 17
    for idx in order:
        center = np.array([m.reshape(-1)[idx] for m in mesh])
        w = width.copy()
        for _ in range(zoom_levels):
            zaxes = []
            for k in range(len(lo)):
                ax = np.linspace(center[k] - w[k], center[k] + w[k], pts)
                if not periodic[k]:
                    ax = np.clip(ax, lo[k], hi[k])
                zaxes.append(ax)
            zv, zmesh = _grid_eval(T, zaxes, is_c)
            j = int(np.argmin(zv))
            center = np.array([m.reshape(-1)[j] for m in zmesh])
            best = min(best, float(zv.reshape(-1)[j]))
            w = w / 4.0
    return best


# ---------------------------------------------------- complement property


@dataclass(frozen=True)
class ComplementReport:
    holds: bool
    violating_subset: tuple | None
    rank_subset: int | None
    rank_complement: int | None
    m: int
    n: int

    @property
    def below_count_bound(self) -> bool:
        """``m < 2n - 1``: phase retrieval is impossible by counting alone."""
        return self.m < 2 * self.n - 1

    def to_dict(self):
        return {
            "holds": self.holds,
            "violating_subset": list(self.violating_subset) if self.violating_subset is not None else None,
            "rank_subset": self.rank_subset,
            "rank_complement": self.rank_complement,
            "m": self.m,
            "n": self.n,
            "below_count_bound": self.below_count_bound,
        }


def _batched_rank(stack, rtol):
    sv = np.linalg.svd(stack, compute_uv=False)
    smax = sv[..., :1]
    return np.sum(sv > rtol * np.where(smax > 0, smax, np.inf), axis=-1)


def complement_property(frame: FrameSpec, rtol: float = 1e-10, chunk: int = 1 << 14) -> ComplementReport:
    """Exhaustive complement-property check for a real frame.

    Subsets containing index 0 are enumerated in increasing bitmask order (the
    property is symmetric under ``S <-> S^c``); the first split with both sides
    rank deficient is reported. Indices are 0-based.
    """
    if frame.is_complex:
        raise FieldUnsupported("the complement property characterizes phase retrieval only for real frames")
    m, n = frame.m, frame.dim
    if m > CP_MAX_M:
        raise TooLarge(f"exhaustive scan needs m <= {CP_MAX_M}, got m = {m}")
    V = frame.effective_vectors
    bits = 1 << np.arange(m)
    total = 1 << (m - 1)
    for start in range(0, total, chunk):
        masks = (np.arange(start, min(start + chunk, total), dtype=np.int64) << 1) | 1
        sel = (masks[:, None] & bits[None, :]) != 0
        r_in = _batched_rank(sel[:, :, None] * V[None], rtol)
        r_out = _batched_rank((~sel)[:, :, None] * V[None], rtol)
        bad = np.flatnonzero((r_in < n) & (r_out < n))
        if bad.size:
            k = int(bad[0])
            subset = tuple(int(j) for j in np.flatnonzero(sel[k]))
            return ComplementReport(False, subset, int(r_in[k]), int(r_out[k]), m, n)
    return ComplementReport(True, None, None, None, m, n)


def _null_basis(rows, n, rtol=1e-10):
    if rows.shape[0] == 0:
        return np.eye(n)
    _, sv, vh = np.linalg.svd(rows, full_matrices=True)
    smax = sv[0] if sv.size else 0.0
    rank = int(np.sum(sv > rtol * smax)) if smax > 0 else 0
    return vh[rank:].conj().T


def pr_failure_witness(frame: FrameSpec, report: ComplementReport) -> OrthoPair:
    """Orthogonal pair with equal magnitudes built from a complement-property violation.

    ``u`` is orthogonal to the vectors in S and ``v`` to those outside it, so
    ``p = u + v`` and ``q = u - v`` have ``|<p, x_j>| = |<q, x_j>|`` for all j.
    The pair is passed through the orthogonal reduction.
    """
    if report.holds or report.violating_subset is None:
        raise PreconditionError("complement property holds: the frame does phase retrieval, no witness exists")
    V = frame.effective_vectors
    n = frame.dim
    inside = np.zeros(frame.m, dtype=bool)
    inside[list(report.violating_subset)] = True
    null_s = _null_basis(V[inside], n)
    null_c = _null_basis(V[~inside], n)
    if null_s.shape[1] == 0 or null_c.shape[1] == 0:
        raise PreconditionError("reported subset is not a complement-property violation")
    v = null_c[:, -1]
    for k in range(null_s.shape[1] - 1, -1, -1):
        u = null_s[:, k]
        if abs(abs(np.vdot(u, v)) - 1.0) > 1e-8:
            break
    else:
        raise DegenerateWitness("every admissible u coincides with +-v; the pair would be projectively equal")
    p, q = u + v, u - v
    try:
        return reduce_pair(frame, p, q)
    except DegeneratePair as exc:
        raise DegenerateWitness(str(exc)) from exc
