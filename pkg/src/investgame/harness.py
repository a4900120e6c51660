"""End-to-end numerical verification of the equilibrium claims.

Three claims are checked at finite horizon, each over a battery of starts
and deviant strategies:

  t3: all three players follow threshold-good strategies -> the mean
      payoff converges to the full-investment point B.
  t4: two good players, arbitrary third -> the deviator's tail mean stays
      below p3 + 2*eps/3.
  t2: one good player, two arbitrary deviators -> the good player's tail
      mean stays above r0, the deviators' sum below 2*p3, and the mean
      trajectory ends on (the closure of) the good player's invest region.

Two worked examples accompany the claims: example 1, a planar two-value
step map whose mean converges to a singleton that itself fails the
Blackwell condition, and example 2, a crafted third-player defector that
drags the play to a point D overshooting p3 by eps/2 while still
respecting the t4 cap.  "Arbitrary strategy" is not testable as stated,
so the battery below (constants, seeded coin flips, the crafted
defector) is the documented adversarial stand-in, extendable by callers.

Repeated-game payoffs are reported as [tail min, tail max] intervals over
the trailing window, never as single numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .approachability import (
    HullOracle,
    LineOracle,
    PointOracle,
    SegmentsOracle,
    check_blackwell,
    intersect_attractors,
    refine_attractor,
)
from .dynamics import (
    Trajectory,
    coordinate,
    coordinate_sum,
    iterate,
    tail_interval,
    tail_liminf,
    tail_limsup,
)
from .geometry import (
    dist_to_region,
    good_region,
    grid_slack,
    hull_mask,
    hull_point,
    norm3,
    polygon_grid,
    region_mask,
)
from .stage_game import (
    INVEST,
    NOT_INVEST,
    GameParams,
    example_game,
    require_valid,
    vertices,
)
from .strategies import (
    Strategy,
    constant_strategy,
    example2_defector,
    good_profile,
    good_strategy,
    induced_map,
    random_strategy,
)

#: Named seeds of the standard random-deviant battery.
DEFAULT_SEEDS = (11, 23, 37, 41, 53, 67, 79, 83, 97, 101)

#: Default (eps, delta) schedule for the attractor refinement step.  The
#: theory promises a workable delta for every eps but gives no formula; below
#: a clip radius of roughly 0.43 * (defector eps) the certificate fails near
#: the clipped set's free end for every delta, so the default stops at 0.25,
#: which certifies for every admissible defector eps in (0, 1/2).
DEFAULT_REFINE_SCHEDULE = ((0.5, 0.3), (0.25, 0.15))


def default_starts() -> tuple[tuple[float, ...], ...]:
    """Barycentric weights of the 8 vertices plus the centroid."""
    eye = []
    for i in range(8):
        w = [0.0] * 8
        w[i] = 1.0
        eye.append(tuple(w))
    eye.append((0.125,) * 8)
    return tuple(eye)


@dataclass(frozen=True)
class HarnessConfig:
    params: GameParams
    eps: float = 0.4
    starts: tuple[tuple[float, ...], ...] = field(default_factory=default_starts)
    n: int = 100_000
    window: float = 0.5
    slack: float = 0.05
    dist_slack: float = 0.1
    dist_pitch: float = 0.25

    def __post_init__(self):
        require_valid(self.params)
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.n < 1000:
            raise ValueError("horizon must be at least 1000")
        if not self.starts:
            raise ValueError("at least one start is required")

    def start_points(self) -> list[tuple[float, float, float]]:
        vs = vertices(self.params)
        return [hull_point(vs, w) for w in self.starts]


@dataclass
class VerifyReport:
    name: str
    passed: bool
    cells: list[dict]
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "cells": self.cells,
            "meta": self.meta,
        }


def standard_deviants(params: GameParams, eps: float, seeds=DEFAULT_SEEDS) -> list[Strategy]:
    """Constant I, constant NI, seeded coin flips, and (when the game is the
    canonical example and eps < 1/2) the crafted defector."""
    battery: list[Strategy] = [constant_strategy(INVEST), constant_strategy(NOT_INVEST)]
    battery += [random_strategy(0.5, s) for s in seeds]
    if params == example_game() and 0.0 < eps < 0.5:
        battery.append(example2_defector(params, eps))
    return battery


def deviant_pairs(params: GameParams, eps: float, seeds=DEFAULT_SEEDS) -> list[tuple[Strategy, Strategy]]:
    const_i = constant_strategy(INVEST)
    const_ni = constant_strategy(NOT_INVEST)
    pairs = [
        (const_i, const_i),
        (const_i, const_ni),
        (const_ni, const_i),
        (const_ni, const_ni),
    ]
    pairs += [(random_strategy(0.5, s), random_strategy(0.5, s + 1000)) for s in seeds]
    if params == example_game() and 0.0 < eps < 0.5:
        pairs.append((example2_defector(params, eps), example2_defector(params, eps)))
    return pairs


def _v3_entry_index(params: GameParams, eps: float, traj: Trajectory) -> int | None:
    arr = traj.means_array()
    mask = np.ones(len(arr), dtype=bool)
    for i in (1, 2, 3):
        mask &= region_mask(params, good_region(i, eps), arr)
    if not mask.any():
        return None
    return int(np.argmax(mask)) + 1


def verify_t3(config: HarnessConfig) -> VerifyReport:
    """All-good profile: final mean within slack of B from every start.

    Also records the first stage whose mean lies in the triple-invest
    region V^3, the absorption event behind the convergence; no a-priori
    bound on that stage exists, so a trajectory that never enters is
    flagged rather than extrapolated.
    """
    params = config.params
    phi = induced_map(good_profile(params, config.eps), params)
    b_point = vertices(params).B
    cells = []
    for w, x1 in zip(config.starts, config.start_points()):
        traj = iterate(phi, x1, config.n)
        dist = norm3([traj.final[k] - b_point[k] for k in range(3)])
        entry = _v3_entry_index(params, config.eps, traj)
        cells.append({
            "theorem": "t3",
            "start": list(x1),
            "start_weights": list(w),
            "deviants": [],
            "N": config.n,
            "measured": dist,
            "bound": config.slack,
            "margin": config.slack - dist,
            "entered_v3_at": entry,
            "tail_intervals": [
                list(tail_interval(traj, coordinate(i), config.window)) for i in (1, 2, 3)
            ],
            "pass": bool(dist <= config.slack and entry is not None),
        })
    return VerifyReport(
        name="t3",
        passed=all(c["pass"] for c in cells),
        cells=cells,
        meta={"eps": config.eps, "target": list(b_point)},
    )


def verify_t4(config: HarnessConfig, deviants: list[Strategy] | None = None) -> VerifyReport:
    """Two good players cap the third's tail mean at p3 + 2*eps/3 (+ slack)."""
    params = config.params
    if deviants is None:
        deviants = standard_deviants(params, config.eps)
    bound = params.p3 + 2.0 * config.eps / 3.0
    cells = []
    for x1 in config.start_points():
        for dev in deviants:
            profile = (
                good_strategy(1, config.eps, params),
                good_strategy(2, config.eps, params),
                dev.fresh(),
            )
            traj = iterate(induced_map(profile, params), x1, config.n)
            measured = tail_limsup(traj, coordinate(3), config.window)
            intervals = [tail_interval(traj, coordinate(i), config.window) for i in (1, 2, 3)]
            cells.append({
                "theorem": "t4",
                "start": list(x1),
                "deviants": [dev.name],
                "N": config.n,
                "measured": measured,
                "bound": bound + config.slack,
                "margin": bound + config.slack - measured,
                "tail_intervals": [list(iv) for iv in intervals],
                "pass": bool(measured <= bound + config.slack),
            })
    return VerifyReport(
        name="t4",
        passed=all(c["pass"] for c in cells),
        cells=cells,
        meta={
            "eps": config.eps,
            "cap": bound,
            # The sharp cap is p3 + 2*eps/3; the coarser p3 + eps version some
            # statements use is implied by it.  Both are recorded, only the
            # sharp one is asserted.
            "coarse_cap": params.p3 + config.eps,
        },
    )


def verify_t2(config: HarnessConfig, pairs: list[tuple[Strategy, Strategy]] | None = None) -> VerifyReport:
    """One good player: floor r0 on own tail, cap 2*p3 on the deviators' sum,
    and vanishing distance to the closure of the invest region V1."""
    params = config.params
    if pairs is None:
        pairs = deviant_pairs(params, config.eps)
    v1 = good_region(1, config.eps)
    dist_bound = config.dist_slack + grid_slack(config.dist_pitch)
    cells = []
    for x1 in config.start_points():
        for dev2, dev3 in pairs:
            profile = (good_strategy(1, config.eps, params), dev2.fresh(), dev3.fresh())
            traj = iterate(induced_map(profile, params), x1, config.n)
            own_floor = tail_liminf(traj, coordinate(1), config.window)
            pair_cap = tail_limsup(traj, coordinate_sum(2, 3), config.window)
            v1_dist = dist_to_region(params, v1, traj.final, config.dist_pitch)
            checks = {
                "own_tail_min": own_floor >= params.r0 - config.slack,
                "deviators_tail_sum_max": pair_cap <= 2.0 * params.p3 + config.slack,
                "dist_to_v1": v1_dist <= dist_bound,
            }
            cells.append({
                "theorem": "t2",
                "start": list(x1),
                "deviants": [dev2.name, dev3.name],
                "N": config.n,
                "measured": {
                    "own_tail_min": own_floor,
                    "deviators_tail_sum_max": pair_cap,
                    "dist_to_v1": v1_dist,
                },
                "bound": {
                    "own_tail_min": params.r0 - config.slack,
                    "deviators_tail_sum_max": 2.0 * params.p3 + config.slack,
                    "dist_to_v1": dist_bound,
                },
                "margin": {
                    "own_tail_min": own_floor - (params.r0 - config.slack),
                    "deviators_tail_sum_max": 2.0 * params.p3 + config.slack - pair_cap,
                    "dist_to_v1": dist_bound - v1_dist,
                },
                "tail_intervals": [
                    list(tail_interval(traj, coordinate(i), config.window)) for i in (1, 2, 3)
                ],
                "pass": bool(all(checks.values())),
                "checks": {k: bool(v) for k, v in checks.items()},
            })
    return VerifyReport(
        name="t2",
        passed=all(c["pass"] for c in cells),
        cells=cells,
        meta={"eps": config.eps},
    )


# ---------------------------------------------------------------------------
# Worked example 1: planar two-value step map
# ---------------------------------------------------------------------------

def example1_phi(a, b):
    a = tuple(map(float, a))
    b = tuple(map(float, b))

    def phi(x):
        return a if x[1] > 0 else b

    return phi


def example1_limit(a, b) -> tuple[float, float]:
    """Intersection of the segment ab with the horizontal axis."""
    t = a[1] / (a[1] - b[1])
    return (a[0] + t * (b[0] - a[0]), 0.0)


def example1_starts(count: int = 20, seed: int = 7, box: float = 3.0) -> list[tuple[float, float]]:
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-box, box, size=(count, 2))
    return [(float(p[0]), float(p[1])) for p in pts]


def _box_grid(box: float, pitch: float) -> list[tuple[float, float]]:
    axis = np.arange(-box, box + pitch / 2, pitch)
    return [(float(u), float(v)) for u in axis for v in axis]


def run_example1(a, b, starts, n: int, tol: float, pitch: float = 0.25, box: float = 3.0) -> VerifyReport:
    """Mean dynamics of the two-value planar map.

    Checks convergence of every start to the segment/axis intersection d,
    and certifies the Blackwell condition for the axis (holds), for the
    segment ab (holds) and for the singleton {d} (a violation witness is
    expected: the singleton is a weak attractor that fails the condition).
    """
    a = tuple(map(float, a))
    b = tuple(map(float, b))
    if not (a[1] < 0.0 < b[1]):
        raise ValueError("need a below and b above the horizontal axis")
    if a[0] == b[0]:
        raise ValueError("need a1 != b1")
    d = example1_limit(a, b)
    phi = example1_phi(a, b)
    domain = _box_grid(box, pitch)
    bw_line = check_blackwell(phi, LineOracle((0.0, 0.0), (1.0, 0.0)), domain, pitch)
    bw_seg = check_blackwell(phi, SegmentsOracle([(a, b)]), domain, pitch)
    bw_point = check_blackwell(phi, PointOracle(d), domain, pitch)
    cells = []
    for x1 in starts:
        traj = iterate(phi, x1, n)
        dist = math.hypot(traj.final[0] - d[0], traj.final[1] - d[1])
        cells.append({
            "theorem": "example1",
            "start": list(x1),
            "deviants": [],
            "N": n,
            "measured": dist,
            "bound": tol,
            "margin": tol - dist,
            "pass": bool(dist <= tol),
        })
    checks_ok = bw_line.holds and bw_seg.holds and not bw_point.holds
    return VerifyReport(
        name="example1",
        passed=all(c["pass"] for c in cells) and checks_ok,
        cells=cells,
        meta={
            "a": list(a), "b": list(b), "limit": list(d),
            "blackwell_line": bw_line.as_dict(),
            "blackwell_segment": bw_seg.as_dict(),
            "blackwell_singleton": bw_point.as_dict(),
        },
    )


# ---------------------------------------------------------------------------
# Worked example 2: the crafted defector on the symmetric slice Z
# ---------------------------------------------------------------------------

def z_polygon_2d(params: GameParams) -> np.ndarray:
    """Vertices of Z = {x in S : x1 = x2} in (t, z) coordinates, x = (t, t, z)."""
    vs = vertices(params)
    pts = np.array([
        (vs.A[0], vs.A[2]),
        (vs.B[0], vs.B[2]),
        (vs.c1[2][0], vs.c1[2][2]),
        (vs.c2[2][0], vs.c2[2][2]),
    ])
    center = pts.mean(axis=0)
    order = np.argsort(np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0]))
    return pts[order]


def lift_z(t: float, z: float) -> tuple[float, float, float]:
    return (t, t, z)


def z_grid(params: GameParams, pitch: float) -> list[tuple[float, float, float]]:
    poly = z_polygon_2d(params)
    return [lift_z(float(p[0]), float(p[1])) for p in polygon_grid(poly, pitch)]


def z_starts(params: GameParams) -> list[tuple[float, float, float]]:
    vs = vertices(params)
    mid_ab = tuple((va + vb) / 2.0 for va, vb in zip(vs.A, vs.B))
    low = tuple((va + vc) / 2.0 for va, vc in zip(vs.A, vs.c2[2]))
    high = tuple((vb + vc) / 2.0 for vb, vc in zip(vs.B, vs.c1[2]))
    return [vs.A, vs.B, mid_ab, low, high]


def sample_near_segments_z(params: GameParams, segments, delta: float,
                           along_pitch: float = 0.25, n_offsets: int = 5) -> list[tuple[float, float, float]]:
    """Points of Z within delta of the given segments (which must lie in Z)."""
    poly = z_polygon_2d(params)
    poly_key = [tuple(p) for p in poly]
    out: list[tuple[float, float, float]] = []
    for a3, b3 in segments:
        a2 = np.array([a3[0], a3[2]])
        b2 = np.array([b3[0], b3[2]])
        u = b2 - a2
        length = float(np.linalg.norm(u))
        n_along = max(2, int(length / along_pitch) + 1)
        normal = np.array([-u[1], u[0]]) / (length if length else 1.0)
        for t in np.linspace(0.0, 1.0, n_along):
            base = a2 + t * u
            for off in np.linspace(-delta, delta, n_offsets):
                q = base + off * normal
                if hull_mask(poly_key, q.reshape(1, 2))[0]:
                    out.append(lift_z(float(q[0]), float(q[1])))
    return out


def run_example2(eps: float, starts=None, n: int = 100_000, tol: float = 0.1,
                 pipeline: bool = True, pitch: float = 0.25,
                 schedule=DEFAULT_REFINE_SCHEDULE, window: float = 0.5) -> VerifyReport:
    """Good, good, crafted defector: play from Z converges to D.

    D = (p3 - eps/2, p3 - eps/2, p3 + eps/2), so the defector's tail mean
    strictly exceeds p3 while still respecting the t4 cap p3 + 2*eps/3.
    The attractor pipeline cross-check certifies the Blackwell condition
    for the triangle co{C1_3, C2_3, D} and for the segment union
    BD u DC1_3 on Z, refines the union to the segment BD, and intersects
    with the triangle to isolate {D}.
    """
    params = example_game()
    defector = example2_defector(params, eps)
    if starts is None:
        starts = z_starts(params)
    for x1 in starts:
        if x1[0] != x1[1]:
            raise ValueError(f"start {x1} is outside the slice Z (x1 != x2)")
    profile = (
        good_strategy(1, eps, params),
        good_strategy(2, eps, params),
        defector,
    )
    phi = induced_map(profile, params)
    d_point = defector.d_point
    cells = []
    last_traj: Trajectory | None = None
    for x1 in starts:
        traj = iterate(phi, x1, n)
        last_traj = traj
        dist = norm3([traj.final[k] - d_point[k] for k in range(3)])
        overshoot = tail_liminf(traj, coordinate(3), window)
        cells.append({
            "theorem": "example2",
            "start": list(x1),
            "deviants": [defector.name],
            "N": n,
            "measured": dist,
            "bound": tol,
            "margin": tol - dist,
            "deviator_tail_min": overshoot,
            "exceeds_p3": bool(overshoot > params.p3),
            "pass": bool(dist <= tol and overshoot > params.p3),
        })
    meta: dict = {"eps": eps, "d_point": list(d_point)}
    passed = all(c["pass"] for c in cells)
    if pipeline:
        vs = vertices(params)
        triangle = HullOracle([vs.c1[2], vs.c2[2], d_point])
        union_segments = [(vs.B, d_point), (d_point, vs.c1[2])]
        union = SegmentsOracle(union_segments)
        domain = z_grid(params, pitch)
        bw_triangle = check_blackwell(phi, triangle, domain, pitch)
        bw_union = check_blackwell(phi, union, domain, pitch)
        bd_segment = SegmentsOracle([(vs.B, d_point)])
        refine = refine_attractor(
            phi,
            union_segments,
            bd_segment,
            schedule,
            lambda delta: sample_near_segments_z(params, union_segments, delta),
            [starts[0]],
            n,
            tol,
        )
        intersect = intersect_attractors(last_traj, bd_segment, triangle, tol)
        meta.update({
            "blackwell_triangle": bw_triangle.as_dict(),
            "blackwell_union": bw_union.as_dict(),
            "refine_to_bd": refine,
            "intersect_bd_triangle": intersect,
        })
        passed = passed and bw_triangle.holds and bw_union.holds \
            and refine["passes"] and intersect["passes"]
    return VerifyReport(name="example2", passed=passed, cells=cells, meta=meta)
