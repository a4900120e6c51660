"""Max-of-linear-forms Lyapunov certificates for the projected dynamics.

V(x) = max_i <p_i, x> over unit directions p_i is the support function of
the direction set: convex, positively homogeneous, 1-Lipschitz.  V
certifies a multivalued step map phi when, outside the sub-level region
Delta_c = {V < c}, every delta-active direction is non-positive on every
value of phi.  That property forces a uniform decrease of V along mean
trajectories (with explicit constants r, gamma, alpha0) and ultimately
traps the trajectory in Delta_c1 for any c1 > c.

The projected step maps of the repeated game are represented here as
finite-valued multimaps on the plane P: the value set starts from the
projected payoff vertices and drops the values a plane position provably
cannot realize.  Each drop rule is keyed to a direction v and a threshold
t: whenever <v, y> > t, every lift of y satisfies a strict coordinate
inequality which, through the region algebra of the good strategies,
rules out the associated stage outcomes.  Dropping too little is safe:
the represented value set is always a superset of the true one, so a
certificate on the representation covers the dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .geometry import (
    V_DIRS,
    dot3,
    norm3,
    plane_grid,
    project_plane,
)
from .stage_game import GameParams, vertices

_S2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SupportSpec:
    """Unit directions plus the certificate constants c and delta."""

    vectors: tuple[tuple[float, float, float], ...]
    c: float
    delta: float

    def __post_init__(self):
        for p in self.vectors:
            if abs(norm3(p) - 1.0) > 1e-12:
                raise ValueError(f"direction {p} is not a unit vector")
        if not 0.0 < self.delta < self.c:
            raise ValueError("need 0 < delta < c")


def six_direction_spec(c: float, delta: float | None = None) -> SupportSpec:
    """All six plane directions; certifies the all-good projected map."""
    return SupportSpec(vectors=V_DIRS, c=c, delta=c / 2 if delta is None else delta)


def four_direction_spec(c: float, delta: float) -> SupportSpec:
    """Directions v1, v2, v3, v6; certifies the two-good-players map."""
    return SupportSpec(
        vectors=(V_DIRS[0], V_DIRS[1], V_DIRS[2], V_DIRS[5]), c=c, delta=delta
    )


def support_value(spec: SupportSpec, x) -> tuple[float, tuple[int, ...]]:
    """V(x) and the delta-active index set {i : V_i(x) >= V(x) - delta}."""
    vals = [dot3(p, x) for p in spec.vectors]
    v = max(vals)
    active = tuple(i for i, val in enumerate(vals) if val >= v - spec.delta)
    return v, active


@dataclass(frozen=True)
class DropRule:
    direction: tuple[float, float, float]
    threshold: float
    drops: frozenset[int]


class PlaneMultiMap:
    """Finite-valued multimap on the plane P with direction-keyed drop rules."""

    def __init__(self, values, rules: Sequence[DropRule], label: str):
        self.values = [tuple(map(float, v)) for v in values]
        self.rules = tuple(rules)
        self.label = label

    def __call__(self, x) -> list[tuple[float, float, float]]:
        dropped: set[int] = set()
        for rule in self.rules:
            if dot3(rule.direction, x) > rule.threshold:
                dropped |= rule.drops
        return [v for i, v in enumerate(self.values) if i not in dropped]


def good_profile_plane_map(params: GameParams) -> PlaneMultiMap:
    """Projected step map of the all-good profile.

    Value order: B, C1_1, C1_2, C1_3, C2_1, C2_2, C2_3 (projected onto P).
    A never occurs: the coordinate-sum bounds of S force the argmax player
    to invest.  Drops per direction: a positive <v, y> orients one pairwise
    coordinate comparison for every lift, which removes one lone-investor
    vertex (whose cell sits inside an argmax region) and one lone-refuser
    vertex (cell inside an argmin region).
    """
    vs = vertices(params)
    values = [project_plane(p) for p in (vs.B,) + vs.c1 + vs.c2]
    # index map: 0 B, 1..3 C1_j, 4..6 C2_j
    drops_by_dir = (
        frozenset({2, 6}),  # v1: y3 > y2 -> no C1_2, no C2_3
        frozenset({1, 6}),  # v2: y3 > y1 -> no C1_1, no C2_3
        frozenset({1, 5}),  # v3: y2 > y1 -> no C1_1, no C2_2
        frozenset({3, 5}),  # v4: y2 > y3 -> no C1_3, no C2_2
        frozenset({3, 4}),  # v5: y1 > y3 -> no C1_3, no C2_1
        frozenset({2, 4}),  # v6: y1 > y2 -> no C1_2, no C2_1
    )
    rules = [
        DropRule(direction=V_DIRS[i], threshold=0.0, drops=drops_by_dir[i])
        for i in range(6)
    ]
    return PlaneMultiMap(values, rules, label="all_good")


def two_good_plane_map(params: GameParams, eps: float) -> PlaneMultiMap:
    """Projected envelope of any profile (good, good, arbitrary third).

    Value cells on the lifts: {C1_1, C2_2} on V1 minus V2, {C1_2, C2_1} on
    V2 minus V1, {B, C2_3} on V1 and V2, {A, C1_3} on neither.  Value order
    here: C1_1, C2_2, C1_2, C2_1, B, C2_3, A, C1_3.  The v3/v6 rules drop a
    whole cell via the argmax/argmin algebra; the v1/v2 rules fire only
    above eps/sqrt(2), where every lift provably leaves Omega_2^eps resp.
    Omega_1^eps and with it V2 resp. V1.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    vs = vertices(params)
    values = [
        project_plane(p)
        for p in (vs.c1[0], vs.c2[1], vs.c1[1], vs.c2[0], vs.B, vs.c2[2], vs.A, vs.c1[2])
    ]
    thr = eps / _S2
    rules = [
        DropRule(direction=V_DIRS[5], threshold=0.0, drops=frozenset({2, 3})),
        DropRule(direction=V_DIRS[2], threshold=0.0, drops=frozenset({0, 1})),
        DropRule(direction=V_DIRS[0], threshold=thr, drops=frozenset({2, 3, 4, 5})),
        DropRule(direction=V_DIRS[1], threshold=thr, drops=frozenset({0, 1, 4, 5})),
    ]
    return PlaneMultiMap(values, rules, label="two_good")


def certification_grid(spec: SupportSpec, params: GameParams, pitch: float) -> list[tuple[float, float, float]]:
    """Plane-grid samples of the projected payoff hexagon outside Delta_c."""
    pts = plane_grid(params, pitch)
    out = []
    for row in pts:
        y = (float(row[0]), float(row[1]), float(row[2]))
        if max(dot3(p, y) for p in spec.vectors) >= spec.c:
            out.append(y)
    return out


@dataclass
class CertReport:
    holds: bool
    witness: dict | None
    checked: int
    grid_pitch: float | None = None

    def as_dict(self) -> dict:
        return {
            "holds": self.holds,
            "witness": self.witness,
            "checked": self.checked,
            "grid_pitch": self.grid_pitch,
        }


def check_lyapunov(spec: SupportSpec, mmap: Callable, grid: Sequence, tol: float = 1e-9,
                   sufficient: bool = False, pitch: float | None = None) -> CertReport:
    """Certify the support function against the multimap outside Delta_c.

    For every sample x (which must satisfy V(x) >= c), every delta-active
    index i and every value w of the map: V_i(w) <= tol.  With
    sufficient=True the stronger sign condition is checked instead:
    V_i(x) > 0 already forces V_i(w) <= tol.
    """
    if not grid:
        raise ValueError("empty certification grid")
    checked = 0
    for x in grid:
        checked += 1
        v, active = support_value(spec, x)
        if sufficient:
            idxs = [i for i, p in enumerate(spec.vectors) if dot3(p, x) > 0.0]
        else:
            idxs = list(active)
        values = mmap(x)
        for i in idxs:
            p = spec.vectors[i]
            for w in values:
                if dot3(p, w) > tol:
                    return CertReport(
                        holds=False,
                        witness={
                            "x": list(x), "direction_index": i + 1,
                            "value": list(w), "inner": dot3(p, w),
                            "support": v,
                        },
                        checked=checked,
                        grid_pitch=pitch,
                    )
    return CertReport(holds=True, witness=None, checked=checked, grid_pitch=pitch)


@dataclass(frozen=True)
class LyapunovConstants:
    """Feasible constants for the uniform-decrease property.

    Invariants (validated on construction via t1_constants): r < delta/2,
    gamma < c - delta, alpha0 < min{(c-delta-gamma)/(c-delta+M), r/(2M), 1}.
    """

    m_bound: float
    delta: float
    r: float
    gamma: float
    alpha0: float


def validate_constants(spec: SupportSpec, consts: LyapunovConstants) -> None:
    c, d = spec.c, consts.delta
    if not 0.0 < d < c:
        raise ValueError("need 0 < delta < c")
    if not consts.r < d / 2:
        raise ValueError("need r < delta/2")
    if not consts.gamma < c - d:
        raise ValueError("need gamma < c - delta")
    cap = min((c - d - consts.gamma) / (c - d + consts.m_bound), consts.r / (2 * consts.m_bound), 1.0)
    if not 0.0 < consts.alpha0 < cap:
        raise ValueError("alpha0 out of the feasible range")


def t1_constants(spec: SupportSpec, m_bound: float) -> LyapunovConstants:
    """One strictly feasible choice: r = delta/4, gamma = (c - delta)/2,
    alpha0 at 90% of its cap.  Existence is all the decrease property needs;
    optimality of alpha0 is irrelevant."""
    if m_bound <= 0:
        raise ValueError("norm bound must be positive")
    c, d = spec.c, spec.delta
    if not 0.0 < d < c:
        raise ValueError("infeasible: need 0 < delta < c")
    r = d / 4.0
    gamma = (c - d) / 2.0
    alpha0 = 0.9 * min((c - d - gamma) / (c - d + m_bound), r / (2.0 * m_bound), 1.0)
    consts = LyapunovConstants(m_bound=m_bound, delta=d, r=r, gamma=gamma, alpha0=alpha0)
    validate_constants(spec, consts)
    return consts


def decrease_check(spec: SupportSpec, mmap: Callable, consts: LyapunovConstants, grid: Sequence,
                   alphas: Sequence[float] | None = None, tol: float = 1e-9,
                   pitch: float | None = None) -> CertReport:
    """Certify V(a w + (1-a) x) <= V(x) - a gamma on the sampled domain.

    Sampled at a in {alpha0/8, alpha0/4, alpha0/2, alpha0} by default, for
    every map value w at every grid point outside Delta_c.
    """
    if alphas is None:
        a0 = consts.alpha0
        alphas = (a0 / 8, a0 / 4, a0 / 2, a0)
    checked = 0
    for x in grid:
        checked += 1
        v, _ = support_value(spec, x)
        for w in mmap(x):
            for a in alphas:
                pt = (
                    a * w[0] + (1 - a) * x[0],
                    a * w[1] + (1 - a) * x[1],
                    a * w[2] + (1 - a) * x[2],
                )
                val = max(dot3(p, pt) for p in spec.vectors)
                if val > v - a * consts.gamma + tol:
                    return CertReport(
                        holds=False,
                        witness={
                            "x": list(x), "value": list(w), "alpha": a,
                            "lhs": val, "rhs": v - a * consts.gamma,
                        },
                        checked=checked,
                        grid_pitch=pitch,
                    )
    return CertReport(holds=True, witness=None, checked=checked, grid_pitch=pitch)


@dataclass
class EntrapmentReport:
    ok: bool
    entry_index: int | None
    c1: float
    max_after_entry: float

    def as_dict(self) -> dict:
        return {
            "kind": "entrapment",
            "holds": self.ok, "entry_index": self.entry_index,
            "c1": self.c1, "max_after_entry": self.max_after_entry,
        }


def entrapment_check(spec: SupportSpec, means: Sequence, c1: float) -> EntrapmentReport:
    """Least stage N after which the projected means stay inside Delta_c1.

    The means are payoff-space points; each is projected onto P before V is
    evaluated.  Fails when the final mean still sits outside Delta_c1.
    """
    if c1 <= spec.c:
        raise ValueError("need c1 > c")
    vals = [max(dot3(p, project_plane(x)) for p in spec.vectors) for x in means]
    last_bad = 0
    for idx, v in enumerate(vals, start=1):
        if v >= c1:
            last_bad = idx
    if last_bad == len(vals):
        return EntrapmentReport(ok=False, entry_index=None, c1=c1, max_after_entry=vals[-1])
    entry = last_bad + 1
    return EntrapmentReport(
        ok=True, entry_index=entry, c1=c1, max_after_entry=max(vals[entry - 1:]),
    )
