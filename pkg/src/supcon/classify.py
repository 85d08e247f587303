"""Checkers and disproof searches for the supremal convexity notions.

Every checker is one-sided: "holds-within-budget" only records that the
search exhausted its sample budget without a counterexample, while
"violated" comes with a structured witness whose replay reproduces the gap
to 1e-12.  The notions handled here are the pointwise ones (level convexity,
rank-one quasiconvexity, the necessary midpoint condition of
polyquasiconvexity, the supremal Jensen inequality) plus the zero-boundary
(weak Morrey) disproof search.  The periodic and small-boundary checkers
live in the laminate module, which owns the test-field machinery;
``classify_report`` pulls everything together into one table and
cross-validates the verdicts against the implication hierarchy.

Sampling is deterministic given the seed: a battery of entry-specific
special points runs first, then low-discrepancy (Halton) and seeded random
batches until the budget is exhausted.
"""

from __future__ import annotations

import datetime
import itertools
from dataclasses import dataclass, asdict

import numpy as np
from scipy.stats import qmc

from .funcspace import CorpusEntry
from .matspace import is_rank_one_connected, minors_batch, tau

__all__ = [
    "Verdict",
    "DiscreteMeasure",
    "Report",
    "ClassifyConfig",
    "NOTION_STATEMENTS",
    "check_level_convex",
    "check_rank_one_qcx",
    "check_supremal_jensen",
    "check_polyquasiconvex_necessary",
    "search_weak_morrey_violation",
    "classify_report",
    "two_atom_measures",
    "replay_witness",
    "VERDICT_IMPLICATIONS",
]

HOLDS = "holds-within-budget"
VIOLATED = "violated"

#: Deterministic midpoint weights probed before random ones.
LAMBDA_GRID = (0.25, 1.0 / 3.0, 0.5, 2.0 / 3.0, 0.75)

#: What each checker actually tests, embedded in every verdict and report.
NOTION_STATEMENTS = {
    "level_convex":
        "f(lam*xi + (1-lam)*eta) <= max(f(xi), f(eta)) for all xi, eta and 0 < lam < 1",
    "rank_one":
        "the level-convexity inequality restricted to pairs with rank(xi - eta) = 1",
    "polyquasiconvex":
        "necessary condition: f(xi) <= max_i f(xi_i) whenever the minors vector "
        "of xi is a convex combination of the minors vectors of the xi_i",
    "supremal_jensen":
        "f(barycenter(mu)) <= mu-ess-sup of f for every probability measure mu",
    "weak_morrey":
        "f(xi) <= ess sup over the unit cube of f(xi + D phi) for every "
        "Lipschitz phi vanishing on the boundary",
    "periodic_weak_morrey":
        "f(xi) <= ess sup of f(xi + D phi) for every periodic Lipschitz phi "
        "(tested in the cube adapted to the lamination normal)",
    "strong_morrey":
        "for every eps and K there is delta > 0 such that no field with "
        "gradient bound K and boundary values below delta undercuts f(xi) by eps",
    "curl_young_laminates":
        "f(barycenter(nu)) <= nu-ess-sup of f for every finite laminate nu",
}


@dataclass
class Verdict:
    """Outcome of one checker: holds within budget, or a replayable witness."""

    notion: str
    outcome: str
    witness: dict | None
    budget: int
    tol: float
    seed: int
    statement: str = ""

    def __post_init__(self) -> None:
        if not self.statement:
            self.statement = NOTION_STATEMENTS.get(self.notion, "")

    @property
    def violated(self) -> bool:
        return self.outcome == VIOLATED

    def to_dict(self) -> dict:
        return {
            "notion": self.notion,
            "outcome": self.outcome,
            "witness": self.witness,
            "budget": self.budget,
            "tol": self.tol,
            "seed": self.seed,
            "statement": self.statement,
        }


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure on matrix space."""

    atoms: tuple

    def __post_init__(self) -> None:
        ws = np.array([w for _, w in self.atoms], dtype=float)
        if np.any(ws < 0):
            raise ValueError("weights must be nonnegative")
        if abs(ws.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to one (within 1e-12)")
        if not np.any(ws > 0):
            raise ValueError("at least one weight must be strictly positive")

    def barycenter(self) -> np.ndarray:
        return sum(w * np.asarray(m, dtype=float) for m, w in self.atoms)

    def support(self) -> list[np.ndarray]:
        return [np.asarray(m, dtype=float) for m, w in self.atoms if w > 0]


# ---------------------------------------------------------------------------
# witnesses
# ---------------------------------------------------------------------------

def _mat(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _aslist(x) -> list:
    return np.asarray(x, dtype=float).tolist()


def replay_witness(f, witness: dict) -> float:
    """Recompute a witness gap from scratch; must match the stored gap to 1e-12."""
    kind = witness["kind"]
    if kind == "segment":
        xi, eta = _mat(witness["xi"]), _mat(witness["eta"])
        lam = witness["lam"]
        mid = lam * xi + (1.0 - lam) * eta
        return float(f(mid) - max(f(xi), f(eta)))
    if kind == "measure":
        atoms = [(_mat(m), w) for m, w in witness["atoms"]]
        bary = sum(w * m for m, w in atoms)
        sup = max(float(f(m)) for m, w in atoms if w > 0)
        return float(f(bary)) - sup
    if kind == "minor-combination":
        pts = [_mat(p) for p in witness["points"]]
        ws = witness["weights"]
        combined = sum(w * p for w, p in zip(ws, pts))
        return float(f(combined)) - max(float(f(p)) for p in pts)
    if kind in ("two-gradient-field", "affine-field", "cutoff-field",
                "simplicial-field"):
        xi = _mat(witness["xi"])
        vals = [float(f(_mat(m))) for m in witness["field_values"]]
        return float(f(xi)) - max(vals)
    raise ValueError(f"unknown witness kind {kind!r}")


def _segment_witness(xi, eta, lam, f) -> dict:
    mid = lam * xi + (1.0 - lam) * eta
    fx, fe, fm = float(f(xi)), float(f(eta)), float(f(mid))
    return {
        "kind": "segment",
        "xi": _aslist(xi), "eta": _aslist(eta), "lam": float(lam),
        "f_xi": fx, "f_eta": fe, "f_mid": fm,
        "gap": fm - max(fx, fe),
    }


# ---------------------------------------------------------------------------
# sampling streams
# ---------------------------------------------------------------------------

def _halton(dim: int, count: int, seed: int) -> np.ndarray:
    engine = qmc.Halton(d=dim, scramble=True, seed=seed)
    return engine.random(count)


def _random_rank_one(rng, count, N, n, scale):
    a = rng.normal(size=(count, N))
    nu = rng.normal(size=(count, n))
    a /= np.maximum(np.linalg.norm(a, axis=1, keepdims=True), 1e-12)
    nu /= np.maximum(np.linalg.norm(nu, axis=1, keepdims=True), 1e-12)
    t = rng.uniform(0.1, 1.0, size=count) * scale
    return t[:, None, None] * a[:, :, None] * nu[:, None, :]


def _tree_atoms_batch(bar, order, rng, scale):
    """Vectorized full binary rank-one splitting trees around given
    barycenters: (B,N,n) -> atoms (B,2^order,N,n), weights (B,2^order).
    The atoms of each tree satisfy the minors relations of their barycenter
    exactly, which makes them valid combinations for the polyquasiconvexity
    test and admissible measures for the laminate checkers."""
    B, N, n = bar.shape
    pts = bar[:, None]
    wts = np.ones((B, 1))
    for _ in range(order):
        M = pts.shape[1]
        w = _random_rank_one(rng, B * M, N, n, scale).reshape(B, M, N, n)
        theta = rng.uniform(0.15, 0.85, size=(B, M))
        left = pts + (1.0 - theta)[..., None, None] * w
        right = pts - theta[..., None, None] * w
        pts = np.concatenate([left, right], axis=1)
        wts = np.concatenate([wts * theta, wts * (1.0 - theta)], axis=1)
    return pts, wts


def _special_pairs(special_points, rank_one: bool, rank_tol: float = 1e-9):
    pts = [np.asarray(p, dtype=float) for p in special_points]
    for a, b in itertools.combinations(pts, 2):
        if np.array_equal(a, b):
            continue
        if rank_one and not is_rank_one_connected(a, b, rank_tol):
            continue
        yield a, b


def _segment_batches(dims, *, seed, budget, radius, special_points=(),
                     rank_one=False, block=4096):
    """Yield (xi, eta, lam) batches; total triple count stops at budget.

    The deterministic battery of special-point pairs (times the lambda grid)
    comes first, then Halton pair blocks, each pair probed at the lambda grid
    plus one seeded-random lambda.
    """
    N, n = dims
    d = N * n
    used = 0
    battery = list(_special_pairs(special_points, rank_one))
    if battery:
        xi = np.array([a for a, _ in battery])
        eta = np.array([b for _, b in battery])
        for lam in LAMBDA_GRID:
            take = min(len(xi), budget - used)
            if take <= 0:
                return
            yield xi[:take], eta[:take], np.full(take, lam)
            used += take

    # exhaustive coarse-grid pairs when the budget affords them
    if not rank_one:
        coarse = np.linspace(-radius, radius, 5)
        grids = np.meshgrid(*([coarse] * d), indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=-1).reshape(-1, N, n)
        n_pairs = len(nodes) * (len(nodes) - 1) // 2
        if n_pairs * len(LAMBDA_GRID) <= budget - used:
            ii, jj = np.triu_indices(len(nodes), k=1)
            for lam in LAMBDA_GRID:
                take = min(len(ii), budget - used)
                if take <= 0:
                    return
                yield nodes[ii[:take]], nodes[jj[:take]], np.full(take, lam)
                used += take

    rng = np.random.default_rng(seed)
    halton_seed = seed
    while used < budget:
        m = min(block, max(1, (budget - used) // (len(LAMBDA_GRID) + 1)))
        if rank_one:
            H = _halton(d + N + n + 1, m, halton_seed)
            xi = (2.0 * H[:, :d] - 1.0) * radius
            a = 2.0 * H[:, d:d + N] - 1.0
            nu = 2.0 * H[:, d + N:d + N + n] - 1.0
            t = (2.0 * H[:, -1] - 1.0) * 2.0 * radius
            na = np.linalg.norm(a, axis=1)
            nn = np.linalg.norm(nu, axis=1)
            ok = (na > 1e-8) & (nn > 1e-8) & (np.abs(t) > 1e-8)
            xi, a, nu, t = xi[ok], a[ok], nu[ok], t[ok]
            if len(xi) == 0:
                halton_seed += 1
                continue
            w = (a / na[ok, None])[:, :, None] * (nu / nn[ok, None])[:, None, :]
            xi = xi.reshape(-1, N, n)
            eta = xi + t[:, None, None] * w
        else:
            H = _halton(2 * d, m, halton_seed)
            xi = ((2.0 * H[:, :d] - 1.0) * radius).reshape(-1, N, n)
            eta = ((2.0 * H[:, d:] - 1.0) * radius).reshape(-1, N, n)
        halton_seed += 1
        lams = list(LAMBDA_GRID) + [float(rng.uniform(0.05, 0.95))]
        for lam in lams:
            take = min(len(xi), budget - used)
            if take <= 0:
                return
            yield xi[:take], eta[:take], np.full(take, lam)
            used += take


def _run_segment_checker(notion, f, dims, *, tol, budget, seed, radius,
                         special_points, rank_one) -> Verdict:
    used = 0
    for xi, eta, lam in _segment_batches(dims, seed=seed, budget=budget,
                                         radius=radius,
                                         special_points=special_points,
                                         rank_one=rank_one):
        used += len(xi)
        mid = lam[:, None, None] * xi + (1.0 - lam[:, None, None]) * eta
        gaps = f(mid) - np.maximum(f(xi), f(eta))
        worst = int(np.argmax(gaps))
        if gaps[worst] > tol:
            witness = _segment_witness(xi[worst], eta[worst], float(lam[worst]), f)
            return Verdict(notion, VIOLATED, witness, used, tol, seed)
    return Verdict(notion, HOLDS, None, used, tol, seed)


# ---------------------------------------------------------------------------
# the four pointwise checkers
# ---------------------------------------------------------------------------

def check_level_convex(f, dims, *, tol=1e-9, budget=100_000, seed=0,
                       radius=2.0, special_points=()) -> Verdict:
    """Search for a midpoint above the endpoint maximum on arbitrary segments."""
    return _run_segment_checker("level_convex", f, dims, tol=tol, budget=budget,
                                seed=seed, radius=radius,
                                special_points=special_points, rank_one=False)


def check_rank_one_qcx(f, dims, *, tol=1e-9, budget=100_000, seed=0,
                       radius=2.0, special_points=()) -> Verdict:
    """Same search restricted to rank-one connected pairs."""
    return _run_segment_checker("rank_one", f, dims, tol=tol, budget=budget,
                                seed=seed, radius=radius,
                                special_points=special_points, rank_one=True)


def two_atom_measures(dims, *, seed, count, radius=2.0, special_points=()):
    """Two-atom measures mirroring the level-convexity sample stream exactly,
    so the Jensen checker and the level-convexity checker see the same data."""
    out = []
    for xi, eta, lam in _segment_batches(dims, seed=seed, budget=count,
                                         radius=radius,
                                         special_points=special_points,
                                         rank_one=False):
        for x, e, l in zip(xi, eta, lam):
            out.append(DiscreteMeasure(((x, float(l)), (e, float(1.0 - l)))))
    return out


def check_supremal_jensen(f, measures, *, tol=1e-9, seed=0) -> Verdict:
    """Violated iff some measure has f(barycenter) > max over its support."""
    used = 0
    for mu in measures:
        used += 1
        bary = mu.barycenter()
        sup = max(float(f(m)) for m in mu.support())
        gap = float(f(bary)) - sup
        if gap > tol:
            witness = {
                "kind": "measure",
                "atoms": [[_aslist(m), float(w)] for m, w in mu.atoms],
                "barycenter": _aslist(bary),
                "f_barycenter": float(f(bary)),
                "sup_support": sup,
                "gap": gap,
            }
            return Verdict("supremal_jensen", VIOLATED, witness, used, tol, seed)
    return Verdict("supremal_jensen", HOLDS, None, used, tol, seed)


def check_polyquasiconvex_necessary(f, dims, *, tol=1e-9, budget=100_000,
                                    seed=0, radius=2.0, special_points=(),
                                    rejection_tol=1e-8) -> Verdict:
    """Midpoint test on combinations whose minors vectors are consistent.

    Three combination streams: rank-one pairs (always valid: minors are
    affine along rank-one segments), atoms of random rank-one splitting
    trees (valid by construction, which is what makes tuples of more than
    two points reachable at all in matrix dimensions), and blind random
    tuples accepted only when the minors of the weighted point match the
    weighted minors within ``rejection_tol`` (relative).  For accepted
    near-miss tuples the violation threshold is inflated by the residual so
    they cannot fake a violation.
    """
    notion = "polyquasiconvex"
    N, n = dims
    d = N * n
    trivial_minors = tau(N, n) == d  # min(N, n) == 1: every combination valid
    used = 0

    def combo_verdict(pts, ws, resid, fibers, gaps, i):
        return Verdict(notion, VIOLATED, {
            "kind": "minor-combination",
            "points": [_aslist(p) for p in pts[i]],
            "weights": [float(w) for w in ws[i]],
            "minor_residual": float(resid[i]),
            "max_f_points": float(fibers[i].max()),
            "gap": float(gaps[i]),
        }, used, tol, seed)

    # rank-one stream: 60% of the budget (battery included), always valid
    ro_budget = budget if trivial_minors else (budget * 6) // 10
    for xi, eta, lam in _segment_batches(dims, seed=seed, budget=ro_budget,
                                         radius=radius,
                                         special_points=special_points,
                                         rank_one=not trivial_minors):
        used += len(xi)
        mid = lam[:, None, None] * xi + (1.0 - lam[:, None, None]) * eta
        gaps = f(mid) - np.maximum(f(xi), f(eta))
        worst = int(np.argmax(gaps))
        if gaps[worst] > tol:
            w = _segment_witness(xi[worst], eta[worst], float(lam[worst]), f)
            w["kind"] = "minor-combination"
            w["points"] = [w.pop("xi"), w.pop("eta")]
            w["weights"] = [w["lam"], 1.0 - w.pop("lam")]
            w["minor_residual"] = 0.0
            return Verdict(notion, VIOLATED, w, used, tol, seed)
    if trivial_minors:
        return Verdict(notion, HOLDS, None, used, tol, seed)

    rng = np.random.default_rng(seed + 1)
    halton_seed = seed + 1
    block = 2048
    mode = 0
    while used < budget:
        count = min(block, budget - used)
        used += count
        if mode % 2 == 0:
            # splitting-tree atoms: a structurally valid 4-point combination
            bar = rng.uniform(-radius, radius, size=(count, N, n))
            pts, ws = _tree_atoms_batch(bar, 2, rng, radius)
        else:
            # blind tuples, kept only if the minors happen to be consistent
            m_pts = int(rng.integers(2, 4))
            H = _halton(m_pts * d, count, halton_seed)
            halton_seed += 1
            pts = ((2.0 * H - 1.0) * radius).reshape(count, m_pts, N, n)
            ws = rng.dirichlet(np.ones(m_pts), size=count)
        mode += 1
        combined = np.einsum("bm,bmij->bij", ws, pts)
        T_combined = minors_batch(combined)
        T_weighted = np.einsum("bm,bmt->bt", ws, minors_batch(pts))
        scale = 1.0 + np.max(np.abs(T_weighted), axis=1)
        resid = np.max(np.abs(T_combined - T_weighted), axis=1)
        valid = resid <= rejection_tol * scale
        if not valid.any():
            continue
        fibers = f(pts.reshape(-1, N, n)).reshape(count, -1)
        gaps = f(combined) - fibers.max(axis=1)
        # inflate the pass bar by the accepted residual (Lipschitz slack)
        bar_tol = tol + 10.0 * resid * scale
        bad = valid & (gaps > bar_tol)
        if bad.any():
            i = int(np.argmax(np.where(bad, gaps, -np.inf)))
            return combo_verdict(pts, ws, resid, fibers, gaps, i)
    return Verdict(notion, HOLDS, None, used, tol, seed)


# ---------------------------------------------------------------------------
# weak Morrey disproof search (zero-boundary fields)
# ---------------------------------------------------------------------------

def _zigzag_candidates(dims, *, seed, count, radius, special_points, xi):
    """Mean-zero two-gradient candidates (g_plus, g_minus, theta).

    Yields batches (M_plus, M_minus, theta) of absolute gradient values
    xi + g; for special-point pairs the absolute values are the points
    themselves, exactly.
    """
    N, n = dims
    d = N * n
    xi = np.asarray(xi, dtype=float)
    battery_p, battery_m, battery_t = [], [], []
    for a, b in _special_pairs(special_points, rank_one=False):
        diff = (a - b).ravel()
        nrm2 = float(diff @ diff)
        if nrm2 == 0.0:
            continue
        theta = float((xi - b).ravel() @ diff / nrm2)
        if not 1e-9 < theta < 1.0 - 1e-9:
            continue
        if np.max(np.abs(theta * a + (1.0 - theta) * b - xi)) > 1e-12 * (1 + np.max(np.abs(xi))):
            continue
        battery_p.append(a)
        battery_m.append(b)
        battery_t.append(theta)
    if battery_p:
        yield np.array(battery_p), np.array(battery_m), np.array(battery_t)

    halton_seed = seed
    done = len(battery_p)
    block = 4096
    while done < count:
        m = min(block, count - done)
        H = _halton(N + n + 2, m, halton_seed)
        halton_seed += 1
        a = 2.0 * H[:, :N] - 1.0
        nu = 2.0 * H[:, N:N + n] - 1.0
        na = np.linalg.norm(a, axis=1)
        nn = np.linalg.norm(nu, axis=1)
        ok = (na > 1e-8) & (nn > 1e-8)
        a, nu = a[ok] / na[ok, None], nu[ok] / nn[ok, None]
        t = (H[:, -2][ok] * 2.0 + 1e-3) * radius          # magnitude in (0, 2R]
        theta = 0.05 + 0.9 * H[:, -1][ok]
        w = t[:, None, None] * (a[:, :, None] * nu[:, None, :])
        Mp = xi[None] + (1.0 - theta)[:, None, None] * w
        Mm = xi[None] - theta[:, None, None] * w
        done += len(Mp)
        yield Mp, Mm, theta


def _cutoff_values(xi, Mp, Mm, theta):
    """Gradient values of the pyramid-cutoff layer for each laminate candidate.

    Clipping the sawtooth against the boundary-distance cone introduces cells
    with gradients +-K a (x) e_j, K the sawtooth slope bound; those values
    join the essential supremum.  Returns (B, 2n) extra value matrices.
    """
    N, n = xi.shape
    w = (Mp - Mm)  # = t * a (x) nu per candidate
    # slope bound of the profile: max(theta, 1-theta) * |w|
    wn = np.linalg.norm(w.reshape(len(w), -1), axis=1)
    K = np.maximum(theta, 1.0 - theta) * wn
    # direction a from w's row space: w = a (x) nu with |a (x) nu| = |a|
    # recover a as the dominant left factor
    extras = np.empty((len(w), 2 * n, N, n))
    for i, Wi in enumerate(w):
        U, S, Vt = np.linalg.svd(Wi)
        a_vec = U[:, 0] * (S[0] / max(wn[i], 1e-300)) * K[i]
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            extras[i, 2 * j] = xi + np.outer(a_vec, e)
            extras[i, 2 * j + 1] = xi - np.outer(a_vec, e)
    return extras


def search_weak_morrey_violation(f, xi, dims, *, tol=1e-9, budget=20_000,
                                 seed=0, radius=2.0, special_points=(),
                                 mesh_depth=4, restarts=4) -> Verdict:
    """Minimize the essential supremum of f(xi + D phi) over zero-boundary fields.

    Families searched: exact two-slope zigzags when n = 1 (every mean-zero
    two-slope profile is realizable with zero boundary there), laminates cut
    off by the boundary-distance pyramid for n >= 2 (the cutoff layer's
    gradients join the supremum, as two-gradient rigidity demands), and random
    continuous piecewise-affine fields on a simplicial mesh with interior
    nodal degrees of freedom, improved by coordinate descent.
    """
    N, n = dims
    xi = np.asarray(xi, dtype=float).reshape(dims)
    f_xi = float(f(xi))
    used = 0
    best = np.inf
    best_witness = None

    zig_budget = budget if n >= 3 else max(1, budget - mesh_depth ** n * restarts)
    for Mp, Mm, theta in _zigzag_candidates(dims, seed=seed, count=zig_budget,
                                            radius=radius,
                                            special_points=special_points,
                                            xi=xi):
        used += len(Mp)
        ess = np.maximum(f(Mp), f(Mm))
        if n >= 2:
            extras = _cutoff_values(xi, Mp, Mm, theta)
            ess = np.maximum(ess, f(extras).max(axis=1))
        i = int(np.argmin(ess))
        if ess[i] < best:
            best = float(ess[i])
            values = [Mp[i], Mm[i]]
            kind = "two-gradient-field"
            if n >= 2:
                values += list(extras[i])
                kind = "cutoff-field"
            best_witness = {
                "kind": kind,
                "xi": _aslist(xi),
                "theta": float(theta[i]),
                "field_values": [_aslist(v) for v in values],
                "ess_sup": best,
                "f_xi": f_xi,
                "gap": f_xi - best,
            }
        if best < f_xi - tol:
            return Verdict("weak_morrey", VIOLATED, best_witness, used, tol, seed)

    if n <= 2:
        ess, values, its = _simplicial_search(f, xi, dims, seed=seed,
                                              depth=mesh_depth,
                                              restarts=restarts)
        used += its
        if ess < best:
            best = ess
            best_witness = {
                "kind": "simplicial-field",
                "xi": _aslist(xi),
                "field_values": [_aslist(v) for v in values],
                "ess_sup": best,
                "f_xi": f_xi,
                "gap": f_xi - best,
            }
    if best < f_xi - tol:
        return Verdict("weak_morrey", VIOLATED, best_witness, used, tol, seed)
    return Verdict("weak_morrey", HOLDS, None, used, tol, seed)


def _simplicial_search(f, xi, dims, *, seed, depth, restarts):
    """Random piecewise-affine zero-boundary fields on a simplicial mesh of Q.

    Returns (best ess-sup, shifted gradient values of the best field, cost).
    Supports n in {1, 2}; interior nodal values are the unknowns.
    """
    N, n = dims
    rng = np.random.default_rng(seed + 7)
    h = 1.0 / depth
    evaluations = 0

    def gradients(nodal):
        # nodal: values on the (depth+1)^n lattice, shape (*(depth+1 per axis), N)
        if n == 1:
            return (nodal[1:] - nodal[:-1])[:, :, None] / h  # (cells, N, 1)
        cells = []
        for i in range(depth):
            for j in range(depth):
                v00, v10 = nodal[i, j], nodal[i + 1, j]
                v01, v11 = nodal[i, j + 1], nodal[i + 1, j + 1]
                # lower-left and upper-right triangles of the square
                cells.append(np.stack([(v10 - v00) / h, (v01 - v00) / h], axis=1))
                cells.append(np.stack([(v11 - v01) / h, (v11 - v10) / h], axis=1))
        return np.array(cells)

    def objective(nodal):
        g = gradients(nodal)
        return float(np.max(f(xi[None] + g))), g

    best = np.inf
    best_values = []
    shape = (depth + 1,) * n + (N,)
    interior = tuple(slice(1, -1) for _ in range(n))
    for _ in range(restarts):
        nodal = np.zeros(shape)
        nodal[interior] = rng.normal(scale=0.3 * h, size=nodal[interior].shape)
        val, g = objective(nodal)
        evaluations += 1
        for _ in range(3):  # coordinate-descent sweeps
            improved = False
            it = np.ndindex(*nodal[interior].shape)
            for idx in it:
                full = tuple(i + 1 for i in idx[:n]) + idx[n:]
                for step in (h, -h, h / 4, -h / 4):
                    nodal[full] += step
                    cand, g2 = objective(nodal)
                    evaluations += 1
                    if cand < val - 1e-15:
                        val, g = cand, g2
                        improved = True
                    else:
                        nodal[full] -= step
            if not improved:
                break
        if val < best:
            best = val
            best_values = [xi + gi for gi in g]
    return best, best_values, evaluations


# ---------------------------------------------------------------------------
# aggregate report
# ---------------------------------------------------------------------------

#: Implications used to cross-validate verdicts: if the key notion holds
#: within budget, a violation of any listed notion is an internal
#: inconsistency (some search missed a witness the other found).
VERDICT_IMPLICATIONS = {
    "level_convex": ("polyquasiconvex", "rank_one", "weak_morrey",
                     "periodic_weak_morrey", "curl_young_laminates"),
    "polyquasiconvex": ("rank_one", "weak_morrey", "periodic_weak_morrey",
                        "curl_young_laminates"),
    "strong_morrey": ("periodic_weak_morrey", "weak_morrey", "rank_one"),
    "periodic_weak_morrey": ("weak_morrey", "rank_one"),
    "curl_young_laminates": ("rank_one",),
}


@dataclass
class ClassifyConfig:
    budget: int = 100_000
    tol: float = 1e-9
    seed: int = 20240817
    radius: float = 2.0
    K: float = 8.0
    delta_schedule: tuple = tuple(2.0 ** -k for k in range(1, 13))
    field_budget: int | None = None
    max_probe_points: int = 6
    mesh_depth: int = 4
    threads: int = 1

    def resolved_field_budget(self) -> int:
        return self.field_budget if self.field_budget else max(1000, self.budget // 10)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["delta_schedule"] = list(self.delta_schedule)
        return d


@dataclass
class Report:
    name: str
    dims: tuple[int, int]
    verdicts: dict
    inconsistencies: list
    documented_mismatches: list
    config: dict
    timestamp: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dims": list(self.dims),
            "verdicts": {k: v.to_dict() for k, v in self.verdicts.items()},
            "inconsistencies": self.inconsistencies,
            "documented_mismatches": self.documented_mismatches,
            "config": self.config,
            "timestamp": self.timestamp,
        }


def _probe_points(entry_points, dims, max_points) -> list[np.ndarray]:
    pts = [np.asarray(p, dtype=float) for p in entry_points]
    zero = np.zeros(dims)
    if not any(np.array_equal(p, zero) for p in pts):
        pts.append(zero)
    return pts[:max_points]


def verdict_inconsistencies(verdicts: dict) -> list[str]:
    out = []
    for strong, weaker in VERDICT_IMPLICATIONS.items():
        v = verdicts.get(strong)
        if v is not None and not v.violated:
            for wk in weaker:
                w = verdicts.get(wk)
                if w is not None and w.violated:
                    out.append(f"{strong} holds within budget but {wk} is violated")
    return out


def classify_report(entry: CorpusEntry, config: ClassifyConfig | None = None) -> Report:
    """Run every checker on a corpus entry and cross-validate the verdicts.

    Field-based notions (weak, periodic, strong) are probed at the entry's
    special points (plus the origin); a notion is violated if any probe
    point is.  Hierarchy inconsistencies are flagged but the report is still
    produced.
    """
    from . import laminate  # deferred: laminate depends on Verdict above

    cfg = config or ClassifyConfig()
    f = entry
    dims = entry.dims
    sp = entry.special_points
    fb = cfg.resolved_field_budget()
    probes = _probe_points(sp, dims, cfg.max_probe_points)

    def field_verdict(notion, search):
        per_probe = max(1, fb // max(1, len(probes)))
        used = 0
        for p in probes:
            v = search(p, per_probe)
            used += v.budget
            if v.violated:
                v.budget = used
                return v
        return Verdict(notion, HOLDS, None, used, cfg.tol, cfg.seed)

    tasks = {
        "level_convex": lambda: check_level_convex(
            f, dims, tol=cfg.tol, budget=cfg.budget, seed=cfg.seed,
            radius=cfg.radius, special_points=sp),
        "rank_one": lambda: check_rank_one_qcx(
            f, dims, tol=cfg.tol, budget=cfg.budget, seed=cfg.seed,
            radius=cfg.radius, special_points=sp),
        "polyquasiconvex": lambda: check_polyquasiconvex_necessary(
            f, dims, tol=cfg.tol, budget=cfg.budget, seed=cfg.seed,
            radius=cfg.radius, special_points=sp),
        "weak_morrey": lambda: field_verdict(
            "weak_morrey",
            lambda p, b: search_weak_morrey_violation(
                f, p, dims, tol=cfg.tol, budget=b, seed=cfg.seed,
                radius=cfg.radius, special_points=sp,
                mesh_depth=cfg.mesh_depth)),
        "periodic_weak_morrey": lambda: field_verdict(
            "periodic_weak_morrey",
            lambda p, b: laminate.check_periodic_weak_morrey(
                f, p, dims, tol=cfg.tol, budget=b, seed=cfg.seed,
                radius=cfg.radius, special_points=sp)),
        "strong_morrey": lambda: field_verdict(
            "strong_morrey",
            lambda p, b: laminate.search_strong_morrey_violation(
                f, p, dims, K=cfg.K, delta_schedule=cfg.delta_schedule,
                tol=cfg.tol, budget=b, seed=cfg.seed, radius=cfg.radius,
                special_points=sp)),
        "curl_young_laminates": lambda: laminate.check_curl_young_on_laminates(
            f, dims, tol=cfg.tol, budget=cfg.budget, seed=cfg.seed,
            radius=cfg.radius, special_points=sp),
    }
    if cfg.threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = {name: pool.submit(fn) for name, fn in tasks.items()}
            verdicts = {name: fut.result() for name, fut in futures.items()}
    else:
        verdicts = {name: fn() for name, fn in tasks.items()}
    inconsistencies = verdict_inconsistencies(verdicts)

    mismatches = []
    for notion, documented in sorted(entry.documented_properties.items()):
        v = verdicts.get(notion)
        if v is None:
            continue
        if documented and v.violated:
            mismatches.append(f"{notion} documented to hold but a violation was found")
        if not documented and not v.violated:
            mismatches.append(f"{notion} documented to fail but no violation found within budget")

    return Report(
        name=entry.name, dims=dims, verdicts=verdicts,
        inconsistencies=inconsistencies, documented_mismatches=mismatches,
        config=cfg.to_dict(),
        timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(),
    )
