"""Geometry of the payoff set S: projections, regions, distances.

S is the convex hull of the eight stage-game payoff vertices.  Two
orthogonal projections structure the analysis: onto the diagonal line
u = {x1 = x2 = x3} and onto the zero-sum plane P = {x1 + x2 + x3 = 0}.
Six unit directions v1..v6 in P encode pairwise payoff comparisons and
cut the sub-level regions Delta_c(K) used by the support-function
machinery.

Region predicates follow the strict-inequality definitions exactly; the
"closure" used by distance computations relaxes strict inequalities to
non-strict ones.  Distances are exact for convex half-space/hull regions
and grid-approximated (ambient pitch h, error at most h*sqrt(3)) for the
non-convex ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .stage_game import GameParams, PayoffVector, require_valid, vertices

_S2 = math.sqrt(2.0)

#: Unit directions in the plane P; v[i+3] = -v[i] for i = 0, 1, 2.
V_DIRS: tuple[tuple[float, float, float], ...] = (
    (0.0, -1.0 / _S2, 1.0 / _S2),
    (-1.0 / _S2, 0.0, 1.0 / _S2),
    (-1.0 / _S2, 1.0 / _S2, 0.0),
    (0.0, 1.0 / _S2, -1.0 / _S2),
    (1.0 / _S2, 0.0, -1.0 / _S2),
    (1.0 / _S2, -1.0 / _S2, 0.0),
)

PLANE_SUM_TOL = 1e-9
HULL_TOL = 1e-9


def v_dir(i: int) -> tuple[float, float, float]:
    """The i-th plane direction, 1-based (i in 1..6)."""
    if not 1 <= i <= 6:
        raise ValueError(f"direction index {i} out of range 1..6")
    return V_DIRS[i - 1]


def project_diagonal(x) -> PayoffVector:
    """Orthogonal projection onto the line {x1 = x2 = x3}."""
    m = (x[0] + x[1] + x[2]) / 3.0
    return (m, m, m)


def project_plane(x) -> PayoffVector:
    """Orthogonal projection onto the plane {x1 + x2 + x3 = 0}."""
    m = (x[0] + x[1] + x[2]) / 3.0
    return (x[0] - m, x[1] - m, x[2] - m)


def dot3(a, b) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def norm3(a) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def is_plane_point(y, tol: float = PLANE_SUM_TOL) -> bool:
    return abs(y[0] + y[1] + y[2]) <= tol


# Orthonormal basis of the plane P, used for 2-d grids and projections.
_E1 = (1.0 / _S2, -1.0 / _S2, 0.0)
_E2 = (1.0 / math.sqrt(6.0), 1.0 / math.sqrt(6.0), -2.0 / math.sqrt(6.0))


def plane_basis() -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    return _E1, _E2


def to_plane_coords(y) -> tuple[float, float]:
    return (dot3(y, _E1), dot3(y, _E2))


def from_plane_coords(ab) -> PayoffVector:
    a, b = ab
    return (
        a * _E1[0] + b * _E2[0],
        a * _E1[1] + b * _E2[1],
        a * _E1[2] + b * _E2[2],
    )


# ---------------------------------------------------------------------------
# Region specifications
# ---------------------------------------------------------------------------

# Payoff-space kinds are predicates on R^3 points; "delta" acts on plane points.
_PAYOFF_KINDS = ("omega_eps", "w", "v", "omega_max", "phi_min", "hull")


@dataclass(frozen=True)
class RegionSpec:
    """A labeled region with the parameters its membership predicate needs."""

    kind: str
    player: int = 0
    eps: float = 0.0
    ks: tuple[int, ...] = ()
    c: float = 0.0
    points: tuple = ()


def omega_eps_region(i: int, eps: float) -> RegionSpec:
    """{x in S : x_i > x_j - eps for both opponents j} (strict)."""
    return RegionSpec(kind="omega_eps", player=i, eps=eps)


def w_region(i: int) -> RegionSpec:
    """Stop-investing trigger: {x_i < r0 or x_j + x_k > 2 p3} (strict)."""
    return RegionSpec(kind="w", player=i)


def good_region(i: int, eps: float) -> RegionSpec:
    """V_i: where player i's threshold strategy invests."""
    return RegionSpec(kind="v", player=i, eps=eps)


def argmax_region(i: int) -> RegionSpec:
    """{x : x_i is a maximal coordinate}."""
    return RegionSpec(kind="omega_max", player=i)


def argmin_region(i: int) -> RegionSpec:
    """{x : x_i is a minimal coordinate}."""
    return RegionSpec(kind="phi_min", player=i)


def delta_region(ks, c: float) -> RegionSpec:
    """{y in P : <v_k, y> < c for k in ks} (strict), a plane region."""
    return RegionSpec(kind="delta", ks=tuple(sorted(int(k) for k in ks)), c=float(c))


def hull_region(points) -> RegionSpec:
    return RegionSpec(kind="hull", points=tuple(tuple(map(float, p)) for p in points))


def _others(i: int) -> tuple[int, int]:
    if i not in (1, 2, 3):
        raise ValueError(f"player index {i} out of range 1..3")
    return tuple(k for k in (1, 2, 3) if k != i)  # type: ignore[return-value]


def in_region(params: GameParams, spec: RegionSpec, x) -> bool:
    """Membership predicate, strict inequalities evaluated strictly.

    Raises ValueError when the point kind does not match the region kind
    (plane regions demand a zero-sum point, payoff regions a 3-vector).
    """
    if spec.kind == "delta":
        if len(x) != 3 or not is_plane_point(x):
            raise ValueError("delta regions take plane points (coordinates summing to 0)")
        return all(dot3(v_dir(k), x) < spec.c for k in spec.ks)
    if spec.kind not in _PAYOFF_KINDS:
        raise ValueError(f"unknown region kind {spec.kind!r}")
    if len(x) != 3:
        raise ValueError("payoff regions take points of R^3")

    if spec.kind == "hull":
        return _in_hull_cached(spec.points, tuple(map(float, x)))

    i = spec.player
    j, k = _others(i)
    xi, xj, xk = x[i - 1], x[j - 1], x[k - 1]
    if spec.kind == "omega_eps":
        return xi > xj - spec.eps and xi > xk - spec.eps
    if spec.kind == "w":
        return xi < params.r0 or xj + xk > 2.0 * params.p3
    if spec.kind == "v":
        inv_ok = xi > xj - spec.eps and xi > xk - spec.eps
        trigger = xi < params.r0 or xj + xk > 2.0 * params.p3
        return inv_ok and not trigger
    if spec.kind == "omega_max":
        return xi >= xj and xi >= xk
    if spec.kind == "phi_min":
        return xi <= xj and xi <= xk
    raise AssertionError(spec.kind)


def in_closure(params: GameParams, spec: RegionSpec, x) -> bool:
    """Membership in the region's closure (strict inequalities relaxed).

    For payoff-space kinds this includes membership in the closed hull S.
    """
    if spec.kind == "delta":
        if len(x) != 3 or not is_plane_point(x):
            raise ValueError("delta regions take plane points (coordinates summing to 0)")
        return all(dot3(v_dir(k), x) <= spec.c + 1e-12 for k in spec.ks)
    if spec.kind == "hull":
        return _in_hull_cached(spec.points, tuple(map(float, x)))

    if not in_hull(vertices(params).all_points(), x):
        return False
    i = spec.player
    j, k = _others(i)
    xi, xj, xk = x[i - 1], x[j - 1], x[k - 1]
    if spec.kind == "omega_eps":
        return xi >= xj - spec.eps and xi >= xk - spec.eps
    if spec.kind == "w":
        return xi <= params.r0 or xj + xk >= 2.0 * params.p3
    if spec.kind == "v":
        return (
            xi >= xj - spec.eps
            and xi >= xk - spec.eps
            and xi >= params.r0
            and xj + xk <= 2.0 * params.p3
        )
    if spec.kind == "omega_max":
        return xi >= xj and xi >= xk
    if spec.kind == "phi_min":
        return xi <= xj and xi <= xk
    raise AssertionError(spec.kind)


def region_mask(params: GameParams, spec: RegionSpec, pts: np.ndarray, closed: bool = False) -> np.ndarray:
    """Vectorized membership over an (n, 3) array; mirrors in_region/in_closure."""
    pts = np.asarray(pts, dtype=float)
    if spec.kind == "delta":
        mask = np.ones(len(pts), dtype=bool)
        for k in spec.ks:
            vals = pts @ np.asarray(v_dir(k))
            mask &= (vals <= spec.c + 1e-12) if closed else (vals < spec.c)
        return mask
    if spec.kind == "hull":
        return hull_mask(spec.points, pts)

    i = spec.player
    j, k = _others(i)
    xi, xj, xk = pts[:, i - 1], pts[:, j - 1], pts[:, k - 1]
    if spec.kind == "omega_eps":
        if closed:
            return (xi >= xj - spec.eps) & (xi >= xk - spec.eps)
        return (xi > xj - spec.eps) & (xi > xk - spec.eps)
    if spec.kind == "w":
        if closed:
            return (xi <= params.r0) | (xj + xk >= 2.0 * params.p3)
        return (xi < params.r0) | (xj + xk > 2.0 * params.p3)
    if spec.kind == "v":
        if closed:
            return (
                (xi >= xj - spec.eps)
                & (xi >= xk - spec.eps)
                & (xi >= params.r0)
                & (xj + xk <= 2.0 * params.p3)
            )
        return (
            (xi > xj - spec.eps)
            & (xi > xk - spec.eps)
            & ~((xi < params.r0) | (xj + xk > 2.0 * params.p3))
        )
    if spec.kind == "omega_max":
        return (xi >= xj) & (xi >= xk)
    if spec.kind == "phi_min":
        return (xi <= xj) & (xi <= xk)
    raise ValueError(f"unknown region kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# Convex hull helpers (tiny fixed point sets; brute-force facet enumeration)
# ---------------------------------------------------------------------------

def hull_halfspaces(points) -> list[tuple[np.ndarray, float]]:
    """Facet inequalities <n, x> <= b of conv(points), d in {2, 3}.

    Brute force over d-subsets; adequate for the at-most-8-point hulls
    used here.  The hull must be full-dimensional in its ambient space.
    """
    pts = np.asarray(points, dtype=float)
    d = pts.shape[1]
    if d not in (2, 3):
        raise ValueError("hull_halfspaces supports dimension 2 or 3")
    scale = max(1.0, float(np.abs(pts).max()))
    out: list[tuple[np.ndarray, float]] = []
    seen: set[tuple] = set()
    for idx in combinations(range(len(pts)), d):
        sub = pts[list(idx)]
        if d == 3:
            n = np.cross(sub[1] - sub[0], sub[2] - sub[0])
        else:
            e = sub[1] - sub[0]
            n = np.array([-e[1], e[0]])
        nn = np.linalg.norm(n)
        if nn < 1e-12 * scale:
            continue
        n = n / nn
        b = float(n @ sub[0])
        vals = pts @ n - b
        tol = HULL_TOL * scale
        if np.all(vals <= tol):
            pass
        elif np.all(vals >= -tol):
            n, b = -n, -b
        else:
            continue
        key = tuple(np.round(np.append(n, b), 9))
        if key not in seen:
            seen.add(key)
            out.append((n, b))
    if not out:
        raise ValueError("degenerate point set: no facets found")
    return out


@lru_cache(maxsize=64)
def _halfspaces_cached(points_key: tuple) -> tuple:
    hs = hull_halfspaces(np.array(points_key))
    return tuple((tuple(n), b) for n, b in hs)


def _hs_key(points) -> tuple:
    return tuple(tuple(float(c) for c in p) for p in points)


def in_hull(points, x, tol: float = HULL_TOL) -> bool:
    hs = _halfspaces_cached(_hs_key(points))
    scale = max(1.0, max(abs(c) for p in points for c in p))
    return all(
        sum(nc * xc for nc, xc in zip(n, x)) <= b + tol * scale for n, b in hs
    )


def _in_hull_cached(points_key: tuple, x: tuple) -> bool:
    return in_hull(points_key, x)


def hull_mask(points, pts: np.ndarray, tol: float = HULL_TOL) -> np.ndarray:
    hs = _halfspaces_cached(_hs_key(points))
    scale = max(1.0, max(abs(c) for p in points for c in p))
    mask = np.ones(len(pts), dtype=bool)
    for n, b in hs:
        mask &= pts @ np.asarray(n) <= b + tol * scale
    return mask


def hull_point(vertex_set, weights) -> PayoffVector:
    """Convex combination of the eight labeled vertices.

    Weights must be nonnegative and sum to 1 within 1e-12.
    """
    w = [float(t) for t in weights]
    pts = vertex_set.all_points()
    if len(w) != len(pts):
        raise ValueError(f"expected {len(pts)} weights, got {len(w)}")
    if any(t < -1e-12 for t in w) or abs(sum(w) - 1.0) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to 1 (tolerance 1e-12)")
    out = [0.0, 0.0, 0.0]
    for t, p in zip(w, pts):
        out[0] += t * p[0]
        out[1] += t * p[1]
        out[2] += t * p[2]
    return (out[0], out[1], out[2])


def project_to_hull(x, points) -> tuple[np.ndarray, float]:
    """Exact nearest point of conv(points) to x.

    Enumerates faces: for every affinely independent subset, solves the
    equality-constrained least squares problem and keeps feasible
    candidates.  Exact for the small point sets used here.
    """
    pts = np.asarray(points, dtype=float)
    x = np.asarray(x, dtype=float)
    k = len(pts)
    best_p: np.ndarray | None = None
    best_d = math.inf
    for size in range(1, k + 1):
        for idx in combinations(range(k), size):
            sub = pts[list(idx)]
            m = len(sub)
            if m == 1:
                cand = sub[0]
            else:
                gram = sub @ sub.T
                kkt = np.zeros((m + 1, m + 1))
                kkt[:m, :m] = gram
                kkt[:m, m] = 1.0
                kkt[m, :m] = 1.0
                rhs = np.append(sub @ x, 1.0)
                try:
                    sol = np.linalg.solve(kkt, rhs)
                except np.linalg.LinAlgError:
                    continue
                w = sol[:m]
                if np.any(w < -1e-12):
                    continue
                cand = w @ sub
            d = float(np.linalg.norm(cand - x))
            if d < best_d - 1e-15:
                best_d = d
                best_p = cand
    assert best_p is not None
    return best_p, best_d


def project_halfspaces(x, halfspaces, hyperplanes=(), tol: float = 1e-12, max_iter: int = 50000) -> np.ndarray:
    """Dykstra's alternating projections onto an intersection.

    halfspaces: iterable of (n, b) with |n| = 1 meaning <n, y> <= b.
    hyperplanes: iterable of (n, b) meaning <n, y> = b.
    Converges to the exact projection of x onto the (nonempty) intersection.
    """
    x = np.asarray(x, dtype=float)
    pieces = [("h", np.asarray(n, float), float(b)) for n, b in halfspaces]
    pieces += [("e", np.asarray(n, float), float(b)) for n, b in hyperplanes]
    if not pieces:
        return x.copy()
    y = x.copy()
    incs = [np.zeros_like(x) for _ in pieces]
    for _ in range(max_iter):
        delta = 0.0
        for idx, (kind, n, b) in enumerate(pieces):
            z = y + incs[idx]
            viol = float(z @ n) - b
            if kind == "e":
                p = z - viol * n
            else:
                p = z - max(0.0, viol) * n
            incs[idx] = z - p
            delta = max(delta, float(np.max(np.abs(p - y))))
            y = p
        if delta < tol:
            break
    return y


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_weights(n: int, k: int = 8, seed: int = 0) -> np.ndarray:
    """n barycentric weight vectors, uniform on the simplex (rejection-free)."""
    rng = np.random.default_rng(seed)
    return rng.dirichlet(np.ones(k), size=n)


def sample_points(params: GameParams, n: int, seed: int = 0) -> np.ndarray:
    """n points of S sampled in barycentric weight space over the 8 vertices."""
    require_valid(params)
    verts = np.asarray(vertices(params).all_points())
    return sample_weights(n, len(verts), seed) @ verts


def hexagon_2d(params: GameParams) -> np.ndarray:
    """Vertices (2-d plane coordinates) of the projection of S onto P."""
    verts = vertices(params)
    proj = [to_plane_coords(project_plane(p)) for p in verts.c1 + verts.c2]
    pts = np.asarray(proj)
    center = pts.mean(axis=0)
    order = np.argsort(np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0]))
    return pts[order]


def polygon_grid(poly_2d: np.ndarray, pitch: float) -> np.ndarray:
    """2-d grid of the given convex polygon at the given pitch."""
    if pitch <= 0:
        raise ValueError("pitch must be positive")
    lo = poly_2d.min(axis=0)
    hi = poly_2d.max(axis=0)
    xs = np.arange(lo[0], hi[0] + pitch / 2, pitch)
    ys = np.arange(lo[1], hi[1] + pitch / 2, pitch)
    grid = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
    return grid[hull_mask([tuple(p) for p in poly_2d], grid)]


def plane_grid(params: GameParams, pitch: float) -> np.ndarray:
    """Grid of the hexagon (projection of S onto P) as (n, 3) plane points."""
    grid2 = polygon_grid(hexagon_2d(params), pitch)
    e1 = np.asarray(_E1)
    e2 = np.asarray(_E2)
    return grid2[:, :1] * e1 + grid2[:, 1:2] * e2


# ---------------------------------------------------------------------------
# Distances to regions
# ---------------------------------------------------------------------------

def grid_slack(h: float) -> float:
    """Worst-case extra distance reported by a pitch-h grid approximation."""
    return h * math.sqrt(3.0)


@lru_cache(maxsize=32)
def _region_grid_cached(params: GameParams, spec: RegionSpec, h: float) -> np.ndarray:
    verts = vertices(params).all_points()
    arr = np.asarray(verts)
    lo = arr.min(axis=0)
    hi = arr.max(axis=0)
    axes = [np.arange(lo[d], hi[d] + h / 2, h) for d in range(3)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    grid = grid[hull_mask(verts, grid)]
    grid = grid[region_mask(params, spec, grid, closed=True)]
    return grid


def dist_to_region(params: GameParams, spec: RegionSpec, x, h: float = 0.25) -> float:
    """Distance from x to the region's closure.

    Exact for the convex kinds (delta via alternating projections, hull via
    face enumeration); for the rest, the minimum over a pitch-h ambient grid
    intersected with the closure, an overestimate by at most grid_slack(h).
    Points already in the closure report distance 0.
    """
    if h <= 0:
        raise ValueError("resolution h must be positive")
    if spec.kind == "delta":
        if len(x) != 3 or not is_plane_point(x):
            raise ValueError("delta regions take plane points (coordinates summing to 0)")
        halfspaces = [(np.asarray(v_dir(k)), spec.c) for k in spec.ks]
        ones = np.ones(3) / math.sqrt(3.0)
        p = project_halfspaces(np.asarray(x, float), halfspaces, hyperplanes=[(ones, 0.0)])
        return float(np.linalg.norm(p - np.asarray(x, float)))
    if spec.kind == "hull":
        _, d = project_to_hull(x, spec.points)
        return d
    if in_closure(params, spec, x):
        return 0.0
    grid = _region_grid_cached(params, spec, float(h))
    if len(grid) == 0:
        raise ValueError(f"empty sampled region for {spec} at resolution {h}")
    d = np.linalg.norm(grid - np.asarray(x, float), axis=1)
    return float(d.min())
