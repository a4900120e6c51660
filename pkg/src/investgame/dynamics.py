"""Mean-payoff trajectory engine and tail statistics.

The repeated game is driven by the running mean of realized payoffs:
given a step map phi, the mean after stage n+1 is
(n * mean_n + phi(mean_n)) / (n + 1).  Everything downstream (strategy
decisions, attractor checks, payoff reports) reads only these means.

Limits of the mean sequence are never reported as single numbers: tail
statistics over a trailing window give [tail_min, tail_max] intervals,
which is what a finite run can actually certify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import project_to_hull


class RunningMean:
    """Incremental arithmetic mean with Kahan-compensated updates.

    Compensation keeps the accumulated rounding drift negligible out to
    horizons of 1e7 steps; the recorded means are exactly the values this
    class produces, so replaying it reproduces a trajectory bit for bit.
    """

    __slots__ = ("mean", "count", "_comp")

    def __init__(self, first: Sequence[float]):
        self.mean = tuple(float(c) for c in first)
        self.count = 1
        self._comp = (0.0,) * len(self.mean)

    def update(self, value: Sequence[float]) -> tuple[float, ...]:
        n1 = self.count + 1
        mean = []
        comp = []
        for m, c, s in zip(self.mean, self._comp, value):
            y = (s - m) / n1 - c
            t = m + y
            comp.append((t - m) - y)
            mean.append(t)
        self.mean = tuple(mean)
        self._comp = tuple(comp)
        self.count = n1
        return self.mean


@dataclass
class Trajectory:
    """Recorded run: means x̄_1..x̄_N and realized stage payoffs x_2..x_N."""

    start: tuple[float, ...]
    means: list[tuple[float, ...]]
    steps: list[tuple[float, ...]]
    _means_arr: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def horizon(self) -> int:
        return len(self.means)

    def means_array(self) -> np.ndarray:
        if self._means_arr is None:
            self._means_arr = np.asarray(self.means, dtype=float)
        return self._means_arr

    @property
    def final(self) -> tuple[float, ...]:
        return self.means[-1]


def iterate(phi: Callable, x1: Sequence[float], n: int) -> Trajectory:
    """Run the mean dynamics from x1 for n stages (x1 counts as stage 1)."""
    if n < 1:
        raise ValueError("horizon must be at least 1")
    start = tuple(float(c) for c in x1)
    means = [start]
    steps: list[tuple[float, ...]] = []
    rm = RunningMean(start)
    append_mean = means.append
    append_step = steps.append
    for _ in range(n - 1):
        step = phi(rm.mean)
        append_step(tuple(step))
        append_mean(rm.update(step))
    return Trajectory(start=start, means=means, steps=steps)


def replay(traj: Trajectory) -> list[tuple[float, ...]]:
    """Recompute the mean sequence from the recorded steps (bit-exact)."""
    rm = RunningMean(traj.start)
    means = [rm.mean]
    for step in traj.steps:
        means.append(rm.update(step))
    return means


def step_size_bound(diameter: float, xi: float) -> int:
    """Smallest N0 with |mean_{n+1} - mean_n| < xi for all n > N0, any step map.

    The one-stage move is |phi(x) - x| / (n + 1) <= diameter / (n + 1), so
    N0 = ceil(diameter / xi) suffices.
    """
    if xi <= 0 or diameter < 0:
        raise ValueError("need diameter >= 0 and xi > 0")
    return max(1, math.ceil(diameter / xi))


def tail_start(n: int, w: float) -> int:
    """0-based index of the first mean inside the trailing window."""
    if not 0.0 < w < 1.0:
        raise ValueError("window fraction must be in (0, 1)")
    if n * w < 1.0:
        raise ValueError("window contains no indices")
    return max(0, math.ceil((1.0 - w) * n) - 1)


def tail_limsup(traj: Trajectory, f: Callable[[np.ndarray], np.ndarray], w: float = 0.5) -> float:
    """Max of f over the means in the trailing window (limsup estimate)."""
    arr = traj.means_array()
    return float(np.max(f(arr[tail_start(traj.horizon, w):])))


def tail_liminf(traj: Trajectory, f: Callable[[np.ndarray], np.ndarray], w: float = 0.5) -> float:
    arr = traj.means_array()
    return float(np.min(f(arr[tail_start(traj.horizon, w):])))


def tail_interval(traj: Trajectory, f, w: float = 0.5) -> tuple[float, float]:
    """[tail min, tail max] of a functional; the reportable repeated-game payoff."""
    return (tail_liminf(traj, f, w), tail_limsup(traj, f, w))


def coordinate(i: int) -> Callable[[np.ndarray], np.ndarray]:
    """Functional picking the i-th payoff coordinate, 1-based."""
    return lambda arr: arr[:, i - 1]


def coordinate_sum(i: int, j: int) -> Callable[[np.ndarray], np.ndarray]:
    return lambda arr: arr[:, i - 1] + arr[:, j - 1]


@dataclass(frozen=True)
class MixingReport:
    ok: bool
    distance: float
    point: tuple[float, ...]


def mixing_bound_check(a0, anchors, t_prefix: int, counts, eps: float) -> MixingReport:
    """Check (T*a0 + sum n_i a_i) / (T + n) lands within eps of co(anchors).

    An old prefix of T identical summands a0 is diluted by n = sum(n_i)
    later summands drawn from the anchors; the witness distance to the
    anchors' hull is returned.
    """
    anchors = [tuple(map(float, a)) for a in anchors]
    counts = [int(c) for c in counts]
    if len(counts) != len(anchors) or any(c < 0 for c in counts):
        raise ValueError("counts must be nonnegative, one per anchor")
    n = sum(counts)
    total = t_prefix + n
    if total <= 0:
        raise ValueError("need T + n > 0")
    acc = [t_prefix * c for c in a0]
    for cnt, a in zip(counts, anchors):
        for d in range(len(acc)):
            acc[d] += cnt * a[d]
    point = tuple(c / total for c in acc)
    _, dist = project_to_hull(point, anchors)
    return MixingReport(ok=dist <= eps, distance=dist, point=point)


def write_csv(traj: Trajectory, fh, comment: str | None = None) -> None:
    """Trajectory CSV: header n,x1..,step1.. with one row per stage.

    Stage 1's step columns carry the start itself (the stage-1 payoff in
    the arithmetic-mean reading).  Floats use 17 significant digits, so a
    round trip through the file is exact.
    """
    d = len(traj.start)
    if comment:
        fh.write(f"# {comment}\n")
    cols = ["n"] + [f"x{k + 1}" for k in range(d)] + [f"step{k + 1}" for k in range(d)]
    fh.write(",".join(cols) + "\n")
    fmt = "%.17g"
    for idx, mean in enumerate(traj.means):
        step = traj.start if idx == 0 else traj.steps[idx - 1]
        row = [str(idx + 1)]
        row += [fmt % c for c in mean]
        row += [fmt % c for c in step]
        fh.write(",".join(row) + "\n")
