"""One-dimensional finite-element power-law experiment.

Minimizes ``F_p(u) = (integral of f^p(u'))^{1/p}`` over piecewise-affine u
with affine boundary data of slope xi, i.e. over per-cell slopes with
prescribed mean.  In one dimension the relaxed value of this inner problem
is the convex envelope of ``f^p`` at xi (at most two active slopes, plus one
adjustment cell to meet the mean constraint exactly on a finite mesh), which
is what makes the experiment an oracle-checkable probe of the power-law
limit: the normalized minimum is compared against the grid convex envelope
of ``f^p`` and, as p grows, against the level-convex lsc envelope of f.

The solver exploits exactly that structure: a two-slope scan with an
adjustment cell, a pattern-search polish of the two slopes, and seeded
random-restart pairwise-exchange descent as a safety net.  Slopes live in
the box [-slope_bound, slope_bound]; the oracle envelope is computed on the
same box so both sides see the same relaxation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .envelope import level_convex_lsc_envelope, lower_hull_1d
from .funcspace import MODE_PLUS_INFINITY, GridSpec, SampledFunction

__all__ = [
    "Mesh1D",
    "FeOptions",
    "FeMinimizeResult",
    "GammaReport",
    "minimize_Fp",
    "gamma_limit_experiment",
    "envelope_oracle_1d",
]


@dataclass(frozen=True)
class Mesh1D:
    """Uniform 1-d mesh of (a, b) with m cells and boundary slope xi."""

    a: float = -0.5
    b: float = 0.5
    cells: int = 64
    xi: float = 0.0

    def __post_init__(self) -> None:
        if self.cells < 2:
            raise ValueError("need at least two cells")
        if self.b <= self.a:
            raise ValueError("b must exceed a")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.cells

    @property
    def length(self) -> float:
        return self.b - self.a


@dataclass
class FeOptions:
    restarts: int = 16
    seed: int = 20240817
    slope_bound: float = 10.0
    scan_points: int = 161
    polish_rounds: int = 40
    tol: float = 1e-9
    oracle_points: int = 2001
    consistency_tol: float = 0.02


@dataclass
class FeMinimizeResult:
    p: float
    min_value: float
    gradient_per_cell: np.ndarray
    iterations: int
    converged: bool
    target_mean: float = 0.0

    def __post_init__(self) -> None:
        g = np.asarray(self.gradient_per_cell, dtype=float)
        scale = 1.0 + abs(self.target_mean)
        if abs(float(g.mean()) - self.target_mean) > 1e-10 * scale:
            raise ValueError("gradient mean must match the boundary slope")
        self.gradient_per_cell = g

    def normalized(self, mesh: Mesh1D) -> float:
        """Value with the |domain|^{1/p} factor removed (mean-integral form)."""
        return self.min_value / mesh.length ** (1.0 / self.p)


def _scalar_eval(f):
    def fs(t):
        t = np.asarray(t, dtype=float)
        return np.asarray(f(t[..., None, None]), dtype=float)
    return fs


def _objective(fs, g, p, h, scale):
    vals = fs(g)
    if np.any(vals < 0):
        raise ValueError("f must be nonnegative on the explored slope range")
    mean_p = float(np.mean((vals / scale) ** p))
    return scale * (h * len(g) * mean_p) ** (1.0 / p)


def _hull_support_slopes(fs, xi, G, p, scale, points=2001):
    """Endpoints of the convex-envelope supporting segment of f^p at xi.

    In one dimension the relaxed minimizer oscillates between at most two
    slopes: the hull's tangency points bracketing xi.  Their fine-grid
    estimates seed the discrete polish.
    """
    x = np.linspace(-G, G, points)
    v = (fs(x) / scale) ** p
    hull = lower_hull_1d(x, v)
    on_hull = np.abs(v - hull) <= 1e-12 * (1.0 + np.abs(v))
    left = np.flatnonzero(on_hull & (x <= xi))
    right = np.flatnonzero(on_hull & (x >= xi))
    a = float(x[left[-1]]) if len(left) else float(xi)
    b = float(x[right[0]]) if len(right) else float(xi)
    return a, b


def _two_slope_value(fs, a, b, xi, m, G, p, scale):
    """Best k-cells-at-a / rest-at-b / one-adjustment-cell profile, or None."""
    if not (min(a, b) - 1e-12 <= xi <= max(a, b) + 1e-12):
        return None
    if a == b:
        theta = 1.0
    else:
        theta = (b - xi) / (b - a)
    best = None
    for k in sorted({int(np.floor(theta * m)), int(np.ceil(theta * m))}):
        k = min(max(k, 0), m - 1)
        c = m * xi - k * a - (m - k - 1) * b
        if abs(c) > G + 1e-12:
            continue
        fa, fb, fc = (float(fs(np.array([a]))[0]), float(fs(np.array([b]))[0]),
                      float(fs(np.array([c]))[0]))
        if min(fa, fb, fc) < 0:
            raise ValueError("f must be nonnegative on the explored slope range")
        mean_p = (k * (fa / scale) ** p + (m - k - 1) * (fb / scale) ** p
                  + (fc / scale) ** p) / m
        val = scale * mean_p ** (1.0 / p)
        if best is None or val < best[0]:
            best = (val, k, c)
    return best


def minimize_Fp(f, p: float, mesh: Mesh1D, opts: FeOptions | None = None) -> FeMinimizeResult:
    """Minimize (sum_i h f^p(g_i))^{1/p} over slopes g with mean(g) = xi.

    Slopes are confined to [-slope_bound, slope_bound].  Requires p >= 1 and
    f nonnegative on that range.  If neither the scan/polish nor the restart
    descent improves below the options tolerance the result is still
    returned, flagged converged=False.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    opts = opts or FeOptions()
    fs = _scalar_eval(f)
    m, h, xi, G = mesh.cells, mesh.h, mesh.xi, opts.slope_bound
    if abs(xi) > G:
        raise ValueError("boundary slope lies outside the slope box")

    S = np.linspace(-G, G, opts.scan_points)
    S = np.unique(np.append(S, xi))
    vals = fs(S)
    if np.any(vals < 0):
        raise ValueError("f must be nonnegative on the explored slope range")
    scale = max(float(vals.max()), float(fs(np.array([xi]))[0]), 1e-300)

    iterations = 0
    length_factor = (h * m) ** (1.0 / p)
    # constant profile is always feasible
    best_val = _objective(fs, np.full(m, xi), p, h, scale)
    best_profile = ("pair", xi, xi, m - 1, xi)

    # two-slope scan with adjustment cell; keep several starts for the polish
    starts = [(best_val, xi, xi)]
    lo = S[S <= xi]
    hi = S[S >= xi]
    for a in lo:
        for b in hi:
            iterations += 1
            got = _two_slope_value(fs, float(a), float(b), xi, m, G, p, scale)
            if got is not None:
                val = got[0] * length_factor
                starts.append((val, float(a), float(b)))
                if val < best_val:
                    best_val = val
                    best_profile = ("pair", float(a), float(b), got[1], got[2])
    starts.sort(key=lambda t: t[0])
    polish_starts = [(a, b) for _, a, b in starts[:8]]
    # the envelope's supporting segment of f^p at xi is the continuum optimum
    polish_starts.append(_hull_support_slopes(fs, xi, G, p, scale))

    # pattern-search polish of the two slopes, from every start
    converged = False
    base_step = float(S[1] - S[0]) if len(S) > 1 else 0.1
    for a0, b0 in polish_starts:
        a, b = a0, b0
        cur = None
        got = _two_slope_value(fs, a, b, xi, m, G, p, scale)
        if got is not None:
            cur = got[0] * length_factor
            if cur < best_val:
                best_val = cur
                best_profile = ("pair", a, b, got[1], got[2])
        step = base_step
        for _ in range(opts.polish_rounds):
            improved = False
            for da, db in ((step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step),
                           (step, step), (-step, -step)):
                na = min(max(a + da, -G), G)
                nb = min(max(b + db, -G), G)
                if na > xi or nb < xi:
                    continue
                got = _two_slope_value(fs, na, nb, xi, m, G, p, scale)
                iterations += 1
                if got is not None:
                    val = got[0] * length_factor
                    if cur is None or val < cur - opts.tol * scale:
                        cur, a, b = val, na, nb
                        improved = True
                        if val < best_val:
                            best_val = val
                            best_profile = ("pair", a, b, got[1], got[2])
            if not improved:
                step *= 0.5
                if step < 1e-9:
                    converged = True
                    break

    # seeded random-restart pairwise-exchange descent (safety net)
    rng = np.random.default_rng(opts.seed)
    g_best = _profile_to_slopes(best_profile, m)
    for _ in range(opts.restarts):
        g = rng.uniform(-G, G, size=m)
        g += xi - g.mean()
        np.clip(g, -G, G, out=g)
        g += xi - g.mean()
        if np.max(np.abs(g)) > G:
            continue
        val = _objective(fs, g, p, h, scale)
        iterations += 1
        for _ in range(3):
            i, j = rng.integers(0, m, size=2)
            if i == j:
                continue
            for t in (0.5, -0.5, 0.1, -0.1):
                cand = g.copy()
                cand[i] += t
                cand[j] -= t
                if np.max(np.abs(cand)) > G:
                    continue
                v = _objective(fs, cand, p, h, scale)
                iterations += 1
                if v < val:
                    g, val = cand, v
        if val < best_val - opts.tol * scale:
            best_val = val
            g_best = g
            best_profile = None

    if best_profile is not None:
        g_best = _profile_to_slopes(best_profile, m)
    # exact mean projection, then the reported value matches the profile
    g_best = g_best + (xi - g_best.mean())
    best_val = _objective(fs, g_best, p, h, scale)
    return FeMinimizeResult(p=float(p), min_value=best_val,
                            gradient_per_cell=g_best, iterations=iterations,
                            converged=converged, target_mean=xi)


def _profile_to_slopes(profile, m):
    _, a, b, k, c = profile
    return np.array([a] * k + [b] * (m - k - 1) + [c], dtype=float)


def envelope_oracle_1d(f, xi: float, p: float, *, slope_bound: float,
                       points: int = 2001) -> float:
    """((f^p)** (xi))^{1/p} on the slope box, via the exact grid lower hull."""
    if points % 2 == 0:
        points += 1
    x = np.linspace(-slope_bound, slope_bound, points)
    fs = _scalar_eval(f)
    vals = fs(x)
    if np.any(vals < 0):
        raise ValueError("f must be nonnegative on the slope box")
    scale = max(float(vals.max()), 1e-300)
    hull = lower_hull_1d(x, (vals / scale) ** p)
    return scale * float(np.interp(xi, x, hull)) ** (1.0 / p)


@dataclass
class GammaReport:
    name: str
    xi: float
    p_schedule: tuple
    rows: list
    f_xi: float
    lslc_at_xi: float
    classification: str
    options: dict

    def to_dict(self) -> dict:
        return {
            "name": self.name, "xi": self.xi,
            "p_schedule": list(self.p_schedule),
            "per_p": self.rows,
            "f_xi": self.f_xi,
            "lslc_at_xi": self.lslc_at_xi,
            "classification": self.classification,
            "options": self.options,
        }

    def save(self, outdir, basename: str = "gamma1d") -> None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / f"{basename}.json", "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        import csv as _csv
        with open(outdir / f"{basename}_gradients.csv", "w", newline="") as fh:
            w = _csv.writer(fh)
            w.writerow(["p", "cell", "slope"])
            for row in self.rows:
                for i, s in enumerate(row["gradient_per_cell"]):
                    w.writerow([row["p"], i, repr(float(s))])


def gamma_limit_experiment(f, xi: float, p_schedule, mesh: Mesh1D | None = None,
                           opts: FeOptions | None = None,
                           name: str = "") -> GammaReport:
    """Run minimize_Fp across the schedule and compare against the envelope
    oracles.

    Each normalized minimum is matched against the grid convex envelope of
    f^p on the slope box; the final value is classified against f(xi):
    within consistency_tol of it means "consistent-with-curl-infty",
    strictly below it means "gap-detected".  The verdict is a finite-p,
    bounded-slope heuristic: right at a kink of a coercive supremand the
    residual gap decays only like log(p)/p, so push the schedule higher
    before reading much into a classification taken exactly there.
    """
    ps = tuple(float(p) for p in p_schedule)
    if any(b <= a for a, b in zip(ps, ps[1:])):
        raise ValueError("p_schedule must be increasing")
    opts = opts or FeOptions()
    mesh = mesh or Mesh1D()
    mesh = Mesh1D(mesh.a, mesh.b, mesh.cells, xi)
    fs = _scalar_eval(f)
    f_xi = float(fs(np.array([xi]))[0])

    rows = []
    for p in ps:
        res = minimize_Fp(f, p, mesh, opts)
        normalized = res.normalized(mesh)
        oracle = envelope_oracle_1d(f, xi, p, slope_bound=opts.slope_bound,
                                    points=opts.oracle_points)
        rows.append({
            "p": p,
            "min_value": res.min_value,
            "normalized": normalized,
            "oracle_value": oracle,
            "gap_to_oracle": normalized - oracle,
            "converged": res.converged,
            "gradient_per_cell": [float(v) for v in res.gradient_per_cell],
        })

    # level-convex lsc envelope of f on the slope box, evaluated at xi
    pts = opts.oracle_points if opts.oracle_points % 2 == 1 else opts.oracle_points + 1
    grid = GridSpec((1, 1), opts.slope_bound, pts)
    sf = SampledFunction(grid, fs(grid.axis()), MODE_PLUS_INFINITY)
    lslc = level_convex_lsc_envelope(sf)
    lslc_at_xi = float(np.interp(xi, grid.axis(), lslc.values))

    final = rows[-1]["normalized"]
    ctol = opts.consistency_tol * max(1.0, abs(f_xi))
    classification = ("consistent-with-curl-infty"
                      if f_xi - final <= ctol else "gap-detected")
    return GammaReport(
        name=name, xi=float(xi), p_schedule=ps, rows=rows, f_xi=f_xi,
        lslc_at_xi=lslc_at_xi, classification=classification,
        options=asdict(opts),
    )
