"""Strategies of the repeated game and the induced step map.

A strategy is a total function from the payoff hull S to {I, NI}; the
only observable it may read is the current mean payoff vector.  A
profile of three strategies composed with the stage payoff map yields
the step map phi driving the mean dynamics.

Strategy kinds double as JSON descriptors for run configuration files:
  {"kind": "good", "eps": 0.4}
  {"kind": "constant", "action": "I" | "NI"}
  {"kind": "random", "p": 0.5, "seed": 11}
  {"kind": "example2_defector", "eps": 0.4}
"""

from __future__ import annotations

import random

from .stage_game import (
    ALL_PROFILES,
    INVEST,
    NOT_INVEST,
    GameParams,
    example_game,
    payoff,
    require_valid,
)


class Strategy:
    """Base: deterministic given (point, own generator state), total on S."""

    name = "strategy"

    def decide(self, x) -> str:
        raise NotImplementedError

    def __call__(self, x) -> str:
        return self.decide(x)

    def descriptor(self) -> dict:
        raise NotImplementedError

    def fresh(self) -> "Strategy":
        """Instance with pristine generator state; stateless kinds return self."""
        return self


class GoodStrategy(Strategy):
    """Invest iff the mean payoff lies in V_i = Omega_i^eps minus W_i.

    Player i invests while close enough to the top (strictly within eps of
    every opponent) and not exploited (own mean at least r0, opponents' sum
    at most 2 p3, the strict complement of the W_i trigger).  Boundary
    points follow the letter of these definitions with no tolerance band.
    """

    def __init__(self, player: int, eps: float, params: GameParams):
        if eps <= 0:
            raise ValueError("eps must be positive")
        require_valid(params)
        if player not in (1, 2, 3):
            raise ValueError("player must be 1, 2 or 3")
        self.player = player
        self.eps = float(eps)
        self._i = player - 1
        self._j, self._k = [m for m in range(3) if m != self._i]
        self._r0 = params.r0
        self._cap = 2.0 * params.p3
        self.name = f"good(eps={eps:g})"

    def decide(self, x) -> str:
        xi = x[self._i]
        xj = x[self._j]
        xk = x[self._k]
        eps = self.eps
        if xi > xj - eps and xi > xk - eps:
            if xi >= self._r0 and xj + xk <= self._cap:
                return INVEST
        return NOT_INVEST

    def descriptor(self) -> dict:
        return {"kind": "good", "eps": self.eps}


def good_strategy(player: int, eps: float, params: GameParams) -> GoodStrategy:
    return GoodStrategy(player, eps, params)


class ConstantStrategy(Strategy):
    def __init__(self, action: str):
        if action not in (INVEST, NOT_INVEST):
            raise ValueError(f"unknown action {action!r}")
        self.action = action
        self.name = f"constant({action})"

    def decide(self, x) -> str:
        return self.action

    def descriptor(self) -> dict:
        return {"kind": "constant", "action": self.action}


def constant_strategy(action: str) -> ConstantStrategy:
    return ConstantStrategy(action)


class RandomStrategy(Strategy):
    """Invest with fixed probability using Python's Mersenne Twister.

    The generator is random.Random(seed); one uniform draw per decision,
    invest iff draw < p.  The algorithm is part of the contract so that
    runs reproduce bit-exactly across machines.  The state is mutable:
    one trajectory at a time; use fresh() for a clean copy.
    """

    def __init__(self, p: float, seed: int):
        if not 0.0 <= p <= 1.0:
            raise ValueError("probability must lie in [0, 1]")
        self.p = float(p)
        self.seed = int(seed)
        self._rng = random.Random(self.seed)
        self.name = f"random({p:g},seed={seed})"

    def decide(self, x) -> str:
        return INVEST if self._rng.random() < self.p else NOT_INVEST

    def descriptor(self) -> dict:
        return {"kind": "random", "p": self.p, "seed": self.seed}

    def fresh(self) -> "RandomStrategy":
        return RandomStrategy(self.p, self.seed)


def random_strategy(p: float, seed: int) -> RandomStrategy:
    return RandomStrategy(p, seed)


class Example2Defector(Strategy):
    """The third-player strategy from worked example 2 of the docs.

    Built for the canonical example game and a threshold eps in (0, 1/2)
    shared with the two good players.  It refuses to invest exactly on
    V_1 intersected with the symmetric slice Z = {x1 = x2} and with the
    triangle spanned by B, D and the lone-investor vertex of player 3,
    where D = (p3 - eps/2, p3 - eps/2, p3 + eps/2).  Against two good
    players this drags the play toward D, overshooting p3 by eps/2.
    """

    def __init__(self, params: GameParams, eps: float):
        canon = example_game()
        if params != canon:
            raise ValueError("the example-2 defector is defined for the canonical example game only")
        if not 0.0 < eps < 0.5:
            raise ValueError("eps must lie in (0, 1/2)")
        self.eps = float(eps)
        self.params = params
        self._good1 = GoodStrategy(1, eps, params)
        # Triangle vertices in the (t, z) coordinates of Z, x = (t, t, z).
        p3, r1, p1 = params.p3, params.r1, params.p1
        tb, zb = p3, p3
        td, zd = p3 - eps / 2.0, p3 + eps / 2.0
        tc, zc = r1, p1
        det = (tb - tc) * (zd - zc) - (td - tc) * (zb - zc)
        self._tc, self._zc = tc, zc
        self._inv = (
            (zd - zc) / det, -(td - tc) / det,
            -(zb - zc) / det, (tb - tc) / det,
        )
        self.d_point = (td, td, zd)
        self.name = f"example2_defector(eps={eps:g})"

    def _in_triangle(self, t: float, z: float) -> bool:
        a11, a12, a21, a22 = self._inv
        dt = t - self._tc
        dz = z - self._zc
        l1 = a11 * dt + a12 * dz
        l2 = a21 * dt + a22 * dz
        l3 = 1.0 - l1 - l2
        return l1 >= -1e-10 and l2 >= -1e-10 and l3 >= -1e-10

    def decide(self, x) -> str:
        if x[0] != x[1]:  # outside the slice Z
            return INVEST
        if self._good1.decide(x) == NOT_INVEST:  # outside V_1 (= V_2 on Z)
            return INVEST
        return NOT_INVEST if self._in_triangle(x[0], x[2]) else INVEST

    def descriptor(self) -> dict:
        return {"kind": "example2_defector", "eps": self.eps}


def example2_defector(params: GameParams, eps: float) -> Example2Defector:
    return Example2Defector(params, eps)


def build_strategy(desc: dict, params: GameParams, seat: int) -> Strategy:
    """Instantiate a strategy from its JSON descriptor for the given seat."""
    kind = desc.get("kind")
    if kind == "good":
        return GoodStrategy(seat, float(desc["eps"]), params)
    if kind == "constant":
        return ConstantStrategy(desc["action"])
    if kind == "random":
        return RandomStrategy(float(desc["p"]), int(desc["seed"]))
    if kind == "example2_defector":
        return Example2Defector(params, float(desc["eps"]))
    raise ValueError(f"unknown strategy kind {kind!r}")


def build_profile(descs, params: GameParams) -> tuple[Strategy, Strategy, Strategy]:
    if len(descs) != 3:
        raise ValueError("a profile needs exactly three strategy descriptors")
    return tuple(build_strategy(d, params, seat) for seat, d in enumerate(descs, start=1))


def good_profile(params: GameParams, eps: float) -> tuple[Strategy, Strategy, Strategy]:
    return tuple(GoodStrategy(i, eps, params) for i in (1, 2, 3))


def induced_map(profile, params: GameParams):
    """phi = payoff o profile: the step map of the mean dynamics."""
    require_valid(params)
    s1, s2, s3 = profile
    table = {acts: payoff(params, acts) for acts in ALL_PROFILES}
    d1, d2, d3 = s1.decide, s2.decide, s3.decide

    def phi(x):
        return table[(d1(x), d2(x), d3(x))]

    return phi
