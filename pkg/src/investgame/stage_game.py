"""Parametric 3-player symmetric invest/not-invest stage game.

The game is described by six numbers: what a non-investor earns when
0, 1 or 2 of the others' group invests (r0, r1, r2, indexed by the total
number of investors), and what an investor earns when 1, 2 or 3 players
invest in total (p1, p2, p3).  All payoffs depend only on the total
number of investors, which makes the game symmetric by construction.

An admissible parameter set satisfies a family of strict inequalities:
monotone payoffs, all-NI being the unique stage Nash profile, total
welfare increasing in the number of investors, a pairwise cap that makes
two-player coalitions unprofitable in the long run, and p2 < r2 so that
full investment is not itself a Nash profile.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable

INVEST = "I"
NOT_INVEST = "NI"
ACTIONS = (INVEST, NOT_INVEST)

#: All 8 action profiles (a1, a2, a3).
ALL_PROFILES = tuple(product(ACTIONS, repeat=3))

PayoffVector = tuple[float, float, float]
ActionProfile = tuple[str, str, str]

# Labels of the admissibility constraints, one per atomic inequality.
CONSTRAINT_LABELS = (
    "0 < r0",
    "r0 < r1",
    "r1 < r2",
    "0 < p1",
    "p1 < p2",
    "p2 < p3",
    "p1 < r0",
    "3*r0 < p1 + 2*r1",
    "p1 + 2*r1 < 2*p2 + r2",
    "2*p2 + r2 < 3*p3",
    "p1 + r1 < 2*p3",
    "p2 < r2",
)


@dataclass(frozen=True)
class GameParams:
    """The six stage-game payoff levels.

    r0, r1, r2: non-investor payoff with 0/1/2 total investors.
    p1, p2, p3: investor payoff with 1/2/3 total investors.
    """

    r0: float
    r1: float
    r2: float
    p1: float
    p2: float
    p3: float

    def as_dict(self) -> dict:
        return {
            "r0": self.r0, "r1": self.r1, "r2": self.r2,
            "p1": self.p1, "p2": self.p2, "p3": self.p3,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GameParams":
        try:
            return cls(*(float(d[k]) for k in ("r0", "r1", "r2", "p1", "p2", "p3")))
        except KeyError as exc:
            raise ValueError(f"game file missing key {exc}") from exc

    @classmethod
    def from_file(cls, path: str) -> "GameParams":
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("game file must be a flat JSON object")
        return cls.from_dict(data)


def example_game() -> GameParams:
    """The canonical admissible game used throughout the docs and tests."""
    return GameParams(r0=20.0, r1=28.0, r2=36.0, p1=10.0, p2=18.0, p3=26.0)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]


def validate_params(params: GameParams) -> ValidationReport:
    """Check the admissibility inequalities, strictly and with no tolerance.

    Returns the list of violated constraint labels.  Non-finite inputs are
    rejected with a ValueError before any inequality is evaluated, so a NaN
    cannot silently "pass" a strict comparison.
    """
    values = (params.r0, params.r1, params.r2, params.p1, params.p2, params.p3)
    if not all(math.isfinite(v) for v in values):
        raise ValueError("game parameters must be finite reals")
    r0, r1, r2, p1, p2, p3 = values
    checks = (
        0.0 < r0,
        r0 < r1,
        r1 < r2,
        0.0 < p1,
        p1 < p2,
        p2 < p3,
        p1 < r0,
        3.0 * r0 < p1 + 2.0 * r1,
        p1 + 2.0 * r1 < 2.0 * p2 + r2,
        2.0 * p2 + r2 < 3.0 * p3,
        p1 + r1 < 2.0 * p3,
        p2 < r2,
    )
    violations = tuple(label for label, ok in zip(CONSTRAINT_LABELS, checks) if not ok)
    return ValidationReport(ok=not violations, violations=violations)


def require_valid(params: GameParams) -> None:
    report = validate_params(params)
    if not report.ok:
        raise ValueError("inadmissible game parameters: " + "; ".join(report.violations))


def payoff(params: GameParams, profile: ActionProfile) -> PayoffVector:
    """Vector payoff of an action profile.

    Implemented by counting investors and reading the (P_I, P_NI) table,
    so permutation equivariance holds by construction.
    """
    n = sum(1 for a in profile if a == INVEST)
    p_invest = (None, params.p1, params.p2, params.p3)[n]
    p_not = (params.r0, params.r1, params.r2, None)[n]
    out = []
    for a in profile:
        if a == INVEST:
            out.append(p_invest)
        elif a == NOT_INVEST:
            out.append(p_not)
        else:
            raise ValueError(f"unknown action {a!r}")
    return (out[0], out[1], out[2])


@dataclass(frozen=True)
class VertexSet:
    """The eight labeled payoff vertices spanning the feasible set S.

    A: all-NI payoff.  B: all-invest payoff.  c1[j]: exactly one investor,
    sitting at coordinate j.  c2[j]: exactly one non-investor, at coordinate j.
    (j is 0-based here; labels C1_1..C2_3 are 1-based.)
    """

    A: PayoffVector
    B: PayoffVector
    c1: tuple[PayoffVector, PayoffVector, PayoffVector]
    c2: tuple[PayoffVector, PayoffVector, PayoffVector]

    def labeled(self) -> dict[str, PayoffVector]:
        out = {"A": self.A, "B": self.B}
        for j in range(3):
            out[f"C1_{j + 1}"] = self.c1[j]
        for j in range(3):
            out[f"C2_{j + 1}"] = self.c2[j]
        return out

    def all_points(self) -> tuple[PayoffVector, ...]:
        return (self.A, self.B) + self.c1 + self.c2


def vertices(params: GameParams) -> VertexSet:
    r0, r1, r2 = params.r0, params.r1, params.r2
    p1, p2, p3 = params.p1, params.p2, params.p3

    def lone(value: float, rest: float, j: int) -> PayoffVector:
        v = [rest, rest, rest]
        v[j] = value
        return (v[0], v[1], v[2])

    return VertexSet(
        A=(r0, r0, r0),
        B=(p3, p3, p3),
        c1=tuple(lone(p1, r1, j) for j in range(3)),
        c2=tuple(lone(r2, p2, j) for j in range(3)),
    )


def permute(x: Iterable, sigma: tuple[int, int, int]) -> tuple:
    """Apply a coordinate permutation: out[sigma[k]] = x[k]."""
    seq = tuple(x)
    out = [None, None, None]
    for k in range(3):
        out[sigma[k]] = seq[k]
    return tuple(out)
