"""Envelope operators on sampled functions.

Five operators, all pointwise infima over the grid:

* ``convex_envelope`` -- greatest convex minorant of the grid samples over the
  box (the exact lower hull of the lifted point set).
* ``level_convex_lsc_envelope`` -- at each node, the smallest sampled
  threshold t such that the node lies in the convex hull of the sublevel
  nodes; its sublevel sets are convex by construction.
* ``pasch_hausdorff`` -- the sup-norm Lipschitz regularization
  ``f_lam(x) = min_y max(f(y), lam |x - y|)``.
* ``lamination_hull`` -- fixpoint of one-dimensional convexification sweeps
  along rank-one grid lines; an upper bracket for the quasiconvexification,
  squeezed between the convex envelope and f.
* ``power_law_envelope`` -- the bracket family ``(E(f^p))^{1/p}`` for an
  increasing schedule of exponents, whose pointwise limit estimates the
  power-law (sup-of-roots) envelope.

Domain truncation is the central compromise: envelopes are computed on the
box only.  For samples extended by ``plus-infinity`` the result is the exact
envelope of the box-restricted function.  For bounded samples extended
constantly (``clamp-to-boundary``) a convex minorant of the *extension* is
bounded above on all of R^d and hence constant, so the power-law convex lower
bracket collapses to the global minimum; ``power_law_envelope`` honors this
(otherwise the box hull would not be a lower bound at all), records it as a
caveat, and ``convex_envelope`` itself always returns the box-restricted
hull.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .funcspace import MODE_CLAMP, SampledFunction, save_csv

__all__ = [
    "convex_envelope",
    "level_convex_lsc_envelope",
    "pasch_hausdorff",
    "lamination_hull",
    "power_law_envelope",
    "PowerLawReport",
    "PowerLawOverflowError",
    "lower_hull_1d",
    "rank_one_grid_directions",
]

MODE_CONVEX_LOWER = "convex-lower"
MODE_LAMINATION_UPPER = "lamination-upper"


class PowerLawOverflowError(RuntimeError):
    """Raised when the sampled values span too many orders of magnitude for
    max-normalized powers to be meaningful."""


# ---------------------------------------------------------------------------
# 1-d kernel: monotone-chain lower hull, exact on the grid
# ---------------------------------------------------------------------------

def lower_hull_1d(positions: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Greatest convex minorant of (positions, values), sampled back at positions.

    Positions must be strictly increasing.  O(m) monotone chain; collinear
    points are dropped so the hull is minimal, but the returned values are
    unaffected.
    """
    x = np.asarray(positions, dtype=float)
    v = np.asarray(values, dtype=float)
    m = len(x)
    if m <= 2:
        return v.copy()
    stack: list[int] = []
    for i in range(m):
        while len(stack) >= 2:
            j, k = stack[-2], stack[-1]
            # pop k when it lies on or above chord (j, i)
            if (x[k] - x[j]) * (v[i] - v[j]) - (x[i] - x[j]) * (v[k] - v[j]) <= 0.0:
                stack.pop()
            else:
                break
        stack.append(i)
    hx = x[stack]
    hv = v[stack]
    return np.interp(x, hx, hv)


# ---------------------------------------------------------------------------
# convex envelope on the box
# ---------------------------------------------------------------------------

def _envelope_values_lp(coords: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Per-node LP: min sum w_i v_i over convex weights reproducing the node."""
    m, d = coords.shape
    A_eq = np.vstack([coords.T, np.ones(m)])
    out = np.empty(m)
    for i in range(m):
        b_eq = np.append(coords[i], 1.0)
        res = linprog(values, A_eq=A_eq, b_eq=b_eq, bounds=(0.0, None),
                      method="highs")
        if not res.success:
            raise RuntimeError(f"envelope LP failed at node {i}: {res.message}")
        out[i] = res.fun
    return np.minimum(out, values)


def _envelope_values_nd(coords: np.ndarray, values: np.ndarray) -> np.ndarray:
    if np.ptp(values) == 0.0:
        return values.copy()
    # affine samples are their own envelope; they also make qhull degenerate
    A = np.hstack([coords, np.ones((len(coords), 1))])
    sol, *_ = np.linalg.lstsq(A, values, rcond=None)
    if np.max(np.abs(A @ sol - values)) <= 1e-12 * max(1.0, np.max(np.abs(values))):
        return values.copy()
    lifted = np.hstack([coords, values[:, None]])
    hull = None
    for opts in ("Qt", "QJ"):
        try:
            hull = ConvexHull(lifted, qhull_options=opts)
            break
        except QhullError:
            continue
    if hull is None:
        return _envelope_values_lp(coords, values)
    eq = hull.equations  # rows: normal | offset, normal . z + offset <= 0
    lower = eq[eq[:, -2] < -1e-12]
    if len(lower) == 0:
        return _envelope_values_lp(coords, values)
    # facet plane: y = (normal_space . x + offset) / (-normal_last);
    # the envelope is the max over the lower facets, accumulated in chunks
    # so the nodes-by-facets product never materializes at once
    est = np.full(len(coords), -np.inf)
    chunk = max(1, 50_000_000 // max(1, len(coords)))
    for lo in range(0, len(lower), chunk):
        block = lower[lo:lo + chunk]
        vals = (coords @ block[:, :-2].T + block[:, -1]) / (-block[:, -2])
        np.maximum(est, vals.max(axis=1), out=est)
    return np.minimum(est, values)


def convex_envelope(f: SampledFunction) -> SampledFunction:
    """Greatest convex minorant of the grid samples over the box.

    The result is below f pointwise and convex along every grid segment.
    One-dimensional grids use the exact monotone chain; higher dimensions
    the lower facets of the lifted hull.
    """
    g = f.grid
    flat = f.values.ravel()
    if g.ndim == 1:
        env = lower_hull_1d(g.axis(), flat)
    else:
        env = _envelope_values_nd(g.node_coords(), flat)
    return f.with_values(env.reshape(g.shape))


# ---------------------------------------------------------------------------
# level-convex lsc envelope
# ---------------------------------------------------------------------------

def _points_in_hull(points: np.ndarray, queries: np.ndarray,
                    tol: float = 1e-9) -> np.ndarray:
    """Boolean mask: which queries lie in conv(points)."""
    if len(points) == 0:
        return np.zeros(len(queries), dtype=bool)
    if len(points) == 1:
        return np.linalg.norm(queries - points[0], axis=1) <= tol
    d = points.shape[1]
    if len(points) > d:
        try:
            hull = ConvexHull(points)
            eq = hull.equations
            vals = queries @ eq[:, :-1].T + eq[:, -1]
            return np.all(vals <= tol, axis=1)
        except QhullError:
            pass
    # degenerate or tiny set: LP feasibility per query
    m = len(points)
    A_eq = np.vstack([points.T, np.ones(m)])
    out = np.zeros(len(queries), dtype=bool)
    for i, q in enumerate(queries):
        res = linprog(np.zeros(m), A_eq=A_eq, b_eq=np.append(q, 1.0),
                      bounds=(0.0, None), method="highs")
        out[i] = bool(res.success)
    return out


def level_convex_lsc_envelope(f: SampledFunction) -> SampledFunction:
    """Smallest-threshold sublevel-hull envelope.

    At each node the result is the smallest sampled value t such that the
    node lies in the convex hull of the nodes with value <= t.  Thresholds
    are the sorted distinct sampled values; no continuous search.
    """
    g = f.grid
    flat = f.values.ravel()
    order = np.argsort(flat, kind="stable")
    svals = flat[order]
    if g.ndim == 1:
        pos = g.axis()
        spos = pos[order]
        prefix_min = np.minimum.accumulate(spos)
        prefix_max = np.maximum.accumulate(spos)
        # first prefix index covering x from the left / right; both monotone
        k_max = np.searchsorted(prefix_max, pos, side="left")
        k_min = np.searchsorted(-prefix_min, -pos, side="left")
        k = np.maximum(k_max, k_min)
        out = svals[np.minimum(k, len(svals) - 1)]
        out = np.minimum(out, flat)
        return f.with_values(out.reshape(g.shape))

    coords = g.node_coords()
    out = flat.copy()
    assigned = np.zeros(len(flat), dtype=bool)
    thresholds = np.unique(svals)
    for t in thresholds:
        todo = ~assigned
        if not todo.any():
            break
        pts = coords[flat <= t]
        inside = _points_in_hull(pts, coords[todo])
        idx = np.flatnonzero(todo)[inside]
        out[idx] = t
        assigned[idx] = True
    out = np.minimum(out, flat)
    return f.with_values(out.reshape(g.shape))


# ---------------------------------------------------------------------------
# Pasch-Hausdorff (sup-norm Lipschitz regularization)
# ---------------------------------------------------------------------------

def pasch_hausdorff(f: SampledFunction, lam: float,
                    chunk: int = 512) -> SampledFunction:
    """f_lam(x) = min over grid nodes y of max(f(y), lam |x - y|).

    The result is lam-Lipschitz (Euclidean distance, sup combination),
    increases pointwise with lam, and recovers f from below as lam grows --
    for nonnegative samples.  The max against the distance term truncates at
    zero from below, so in general f_lam <= max(f, 0) and the transform is a
    minorant of f only where f >= 0; shift negative samples first if the
    minorant property matters.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    g = f.grid
    coords = g.node_coords()
    flat = f.values.ravel()
    out = np.empty_like(flat)
    for lo in range(0, len(flat), chunk):
        hi = min(lo + chunk, len(flat))
        diff = coords[lo:hi, None, :] - coords[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        out[lo:hi] = np.min(np.maximum(flat[None, :], lam * dist), axis=1)
    return f.with_values(out.reshape(g.shape))


# ---------------------------------------------------------------------------
# lamination hull (rank-one line sweeps)
# ---------------------------------------------------------------------------

def _primitive_vectors(k: int, span: int = 2) -> list[tuple[int, ...]]:
    out = set()
    for vec in itertools.product(range(-span, span + 1), repeat=k):
        v = np.array(vec, dtype=int)
        if not v.any():
            continue
        g = np.gcd.reduce(np.abs(v[v != 0]))
        v = v // g
        for x in v:
            if x != 0:
                if x < 0:
                    v = -v
                break
        out.add(tuple(int(x) for x in v))
    return sorted(out)


def rank_one_grid_directions(dims: tuple[int, int], span: int = 2) -> np.ndarray:
    """Integer rank-one directions a (x) nu, components in [-span, span],
    deduplicated up to scaling.  Shape (K, N*n)."""
    N, n = dims
    seen = set()
    dirs = []
    for a in _primitive_vectors(N, span):
        for nu in _primitive_vectors(n, span):
            d = np.outer(a, nu).ravel()
            key = tuple(int(x) for x in d)
            if key not in seen:
                seen.add(key)
                dirs.append(d)
    return np.array(dirs, dtype=int)


def _sweep_lines(shape: tuple[int, ...], step: np.ndarray):
    """Yield flat-index arrays of the maximal grid lines with index step ``step``."""
    P = shape[0]
    d = len(shape)
    strides = np.array([P ** (d - 1 - i) for i in range(d)], dtype=int)
    idx = np.indices(shape).reshape(d, -1).T  # (M, d)
    prev = idx - step
    is_start = np.any((prev < 0) | (prev >= P), axis=1)
    starts = idx[is_start]
    # steps available along each axis before leaving the box
    caps = np.full(len(starts), np.iinfo(np.int64).max, dtype=np.int64)
    for a in range(d):
        s = step[a]
        if s > 0:
            caps = np.minimum(caps, (P - 1 - starts[:, a]) // s)
        elif s < 0:
            caps = np.minimum(caps, starts[:, a] // (-s))
    flat_step = int(step @ strides)
    flat_starts = starts @ strides
    for f0, cap in zip(flat_starts, caps):
        if cap >= 2:  # need at least 3 points for a nontrivial hull
            yield f0 + flat_step * np.arange(cap + 1)


def lamination_hull(f: SampledFunction, max_sweeps: int = 64,
                    tol: float = 1e-7, span: int = 2,
                    full_output: bool = False):
    """Fixpoint of 1-d convexification along every rank-one grid line.

    Each sweep replaces the values along every line in every rank-one integer
    direction (components in [-span, span], deduplicated up to scaling) by
    their 1-d convex envelope.  Stops when a full sweep changes nothing by
    more than tol, or after max_sweeps (the last iterate is then returned
    with ``converged=False`` in the info dict).
    """
    g = f.grid
    vals = f.values.ravel().copy()
    dirs = rank_one_grid_directions(g.dims, span)
    lines = [list(_sweep_lines(g.shape, d)) for d in dirs]
    sweeps = 0
    converged = False
    for sweeps in range(1, max_sweeps + 1):
        delta = 0.0
        for dir_lines in lines:
            for line in dir_lines:
                old = vals[line]
                new = lower_hull_1d(np.arange(len(line), dtype=float), old)
                delta = max(delta, float(np.max(old - new)))
                vals[line] = new
        if delta <= tol:
            converged = True
            break
    result = f.with_values(vals.reshape(g.shape))
    if full_output:
        return result, {"sweeps": sweeps, "converged": converged}
    return result


# ---------------------------------------------------------------------------
# power-law bracket family
# ---------------------------------------------------------------------------

@dataclass
class PowerLawReport:
    """The family (E(f^p))^{1/p} for an increasing p schedule.

    ``per_p`` is pointwise nondecreasing in p (up to 1e-7; the worst breach,
    if any, is recorded in ``monotone_violation`` as (p, node, gap)) and the
    last member, ``limit_estimate``, never exceeds f.
    """

    mode: str
    p_schedule: tuple[float, ...]
    per_p: list[SampledFunction]
    limit_estimate: SampledFunction
    shift: float
    caveats: tuple[str, ...] = ()
    monotone_violation: tuple[float, int, float] | None = None
    sup_gap_to_f: float = 0.0

    def gap_detected(self, tol: float = 0.1) -> bool:
        """Whether the limit estimate falls materially below f somewhere,
        the signature of a supremand that is not a power-law limit of its
        own quasiconvexified powers."""
        return self.sup_gap_to_f > tol

    def save(self, outdir, basename: str = "powerlaw") -> dict:
        from pathlib import Path
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        refs = []
        for p, sf in zip(self.p_schedule, self.per_p):
            ref = f"{basename}_p{p:g}.csv"
            save_csv(sf, outdir / ref)
            refs.append(ref)
        limit_ref = f"{basename}_limit.csv"
        save_csv(self.limit_estimate, outdir / limit_ref)
        doc = {
            "mode": self.mode,
            "p_schedule": list(self.p_schedule),
            "shift": self.shift,
            "caveats": list(self.caveats),
            "per_p": refs,
            "limit": limit_ref,
            "monotone_violation": (list(self.monotone_violation)
                                   if self.monotone_violation else None),
            "sup_gap_to_f": self.sup_gap_to_f,
            "gap_detected": self.gap_detected(),
        }
        import json
        with open(outdir / f"{basename}.json", "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return doc


def power_law_envelope(f: SampledFunction, p_schedule,
                       mode: str = MODE_CONVEX_LOWER,
                       max_sweeps: int = 64, tol: float = 1e-7) -> PowerLawReport:
    """Compute (E(f^p))^{1/p} for each p with E the convex envelope
    (``convex-lower``) or the lamination hull (``lamination-upper``).

    Negative samples are first shifted up by their minimum (recorded and
    undone afterwards; sup-norm envelopes commute with constant shifts).
    Powers are taken after max-normalization, which is exact by positive
    homogeneity of both envelope operators.
    """
    ps = tuple(float(p) for p in p_schedule)
    if not ps or any(p <= 1 for p in ps) or any(b <= a for a, b in zip(ps, ps[1:])):
        raise ValueError("p_schedule must be increasing with every p > 1")
    if mode not in (MODE_CONVEX_LOWER, MODE_LAMINATION_UPPER):
        raise ValueError(f"unknown mode {mode!r}")

    caveats = []
    vals = f.values.ravel()
    shift = max(0.0, -float(vals.min()))
    if shift > 0.0:
        caveats.append(f"values shifted up by {shift!r} before taking powers")
    work = vals + shift
    M = float(work.max())
    if M > 0.0:
        positive = work[work > 0.0]
        if positive.size and M / float(positive.min()) > 1e12:
            raise PowerLawOverflowError(
                "sampled values span more than 1e12 dynamic range")

    clamp_collapse = (mode == MODE_CONVEX_LOWER and f.outside_mode == MODE_CLAMP)
    if clamp_collapse:
        caveats.append(
            "clamp-to-boundary extension is globally bounded, so its convex "
            "lower bracket is the constant global minimum")
    elif f.outside_mode == MODE_CLAMP:
        caveats.append("box-restricted upper bracket of a bounded function")
    else:
        caveats.append(
            "box truncation: envelope of the restricted function "
            "over-estimates the global one near the boundary")

    g_norm = work / M if M > 0.0 else np.zeros_like(work)

    # The d >= 2 hull works at absolute precision, and the 1/p root amplifies
    # absolute errors on exponentially small powered values without bound, so
    # exponents that push the positive powered range past the reliable window
    # are dropped (the 1-d monotone chain is selection-based and immune).
    if (mode == MODE_CONVEX_LOWER and not clamp_collapse
            and f.grid.ndim >= 2 and M > 0.0):
        positive = g_norm[g_norm > 0.0]
        gmin = float(positive.min()) if positive.size else 1.0
        if gmin < 1.0:
            keep = tuple(p for p in ps if gmin ** p >= 1e-12)
            if not keep:
                raise PowerLawOverflowError(
                    "every scheduled exponent drives the powered values past "
                    "the reliable dynamic range of the multi-d hull")
            if keep != ps:
                caveats.append(
                    f"exponents beyond p={keep[-1]:g} dropped: powered values "
                    "would exceed the reliable dynamic range of the multi-d hull")
                ps = keep

    per_p = []
    for p in ps:
        gp = g_norm ** p
        if clamp_collapse:
            env = np.full_like(gp, float(gp.min()))
        elif mode == MODE_CONVEX_LOWER:
            env = convex_envelope(f.with_values(gp.reshape(f.grid.shape))).values.ravel()
        else:
            env = lamination_hull(f.with_values(gp.reshape(f.grid.shape)),
                                  max_sweeps=max_sweeps, tol=tol).values.ravel()
        est = M * np.power(np.maximum(env, 0.0), 1.0 / p) - shift
        per_p.append(f.with_values(est.reshape(f.grid.shape)))

    violation = None
    worst = 1e-7
    for (pa, fa), (pb, fb) in zip(zip(ps, per_p), zip(ps[1:], per_p[1:])):
        drop = fa.values.ravel() - fb.values.ravel()
        node = int(np.argmax(drop))
        if drop[node] > worst:
            worst = float(drop[node])
            violation = (pb, node, worst)

    sup_gap = float(np.max(vals - per_p[-1].values.ravel()))
    return PowerLawReport(
        mode=mode, p_schedule=ps, per_p=per_p, limit_estimate=per_p[-1],
        shift=shift, caveats=tuple(caveats), monotone_violation=violation,
        sup_gap_to_f=sup_gap,
    )
