"""Analytics and Monte Carlo for the dominating one-dimensional birth-death chain.

The expected first-passage times obey f[0] = 1/b_0 and
f[r] = 1/b_r + (d_r/b_r) f[r-1]; the expected explosion time from r0 is the
series sum of f[r], truncated once a three-part remainder bound (1/b tail
integral, geometric term, cross term) drops below tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import kernels
from .errors import DivergentTail, NonSummable, ZeroBirthRate
from .model import ModelParams
from .rng import UniformFeed, as_generator

__all__ = [
    "BirthDeathSpec",
    "HittingTimes",
    "expected_hitting_times",
    "expected_explosion_time",
    "mc_first_passage",
    "simulate_bd",
]


@dataclass(frozen=True)
class BirthDeathSpec:
    """Rate maps r -> b_r, r -> d_r of a birth-death chain on the nonnegative integers.

    The callables must accept float arrays (states are integers but rates may
    be probed at real arguments by the tail-integral remainder bound).
    """

    b: Callable[[np.ndarray], np.ndarray]
    d: Callable[[np.ndarray], np.ndarray]
    derived_from: ModelParams | None = None

    def tabulate(self, r_hi: int) -> tuple[np.ndarray, np.ndarray]:
        grid = np.arange(r_hi + 1, dtype=float)
        btab = np.asarray(self.b(grid), dtype=float)
        dtab = np.asarray(self.d(grid), dtype=float)
        if dtab[0] != 0.0:
            raise ValueError("d_0 must be zero (state -1 does not exist)")
        if np.any(btab < 0) or np.any(dtab < 0):
            raise ValueError("rates must be nonnegative")
        return btab, dtab

    @classmethod
    def from_model(cls, params: ModelParams) -> "BirthDeathSpec":
        """The dominating chain of the coupling: b_r = ell*n*b(r/(ell*n)) and,
        for bounded d, d_r = ell*n*||d||_inf (0 at r = 0); for linear d,
        d_r = slope * r."""
        scale = params.ell * params.n

        def births(r, scale=scale, b=params.b.eval):
            return scale * np.asarray(b(np.asarray(r, dtype=float) / scale))

        if params.d.family == "linear":
            c = float(params.d.slope)

            def deaths(r, c=c):
                return c * np.asarray(r, dtype=float)
        elif params.d.sup_value is not None:
            dsup = float(params.d.sup_value)

            def deaths(r, rate=scale * dsup):
                r = np.asarray(r, dtype=float)
                return np.where(r > 0, rate, 0.0)
        else:
            raise ValueError("dominating chain needs d bounded (known sup) or linear")
        return cls(b=births, d=deaths, derived_from=params)


@dataclass
class HittingTimes:
    """f[r] = expected time to first hit r+1 from r; valid for r >= floor."""

    f: np.ndarray
    r_max: int
    tail_bound: float
    floor: int = 0


def expected_hitting_times(spec: BirthDeathSpec, r_max: int, *,
                           floor: int = 0) -> HittingTimes:
    """First-passage expectations by the standard recursion.

    ``floor`` > 0 starts the recursion at f[floor] = 1/b_floor, dropping the
    d_floor/b_floor carry from below; use it only when excursions below floor
    carry negligible weight (products of d/b along the ladder are tiny).
    With floor = 0 the result is exact since d_0 = 0.
    """
    btab, dtab = spec.tabulate(r_max)
    if np.any(btab[floor:] == 0.0):
        raise ZeroBirthRate(f"b_r = 0 at r = {floor + int(np.argmin(btab[floor:] > 0))}")
    f = np.full(r_max + 1, np.nan)
    f[floor:] = _recurse(btab, dtab, floor, 0.0)
    try:
        tail = _remainder_bound(spec, r_max, float(f[r_max]))
    except (DivergentTail, NonSummable):
        tail = math.inf
    return HittingTimes(f=f, r_max=r_max, tail_bound=tail, floor=floor)


def _recurse(btab, dtab, floor, carry):
    """f values for states floor..len-1 given f[floor-1] = carry."""
    if np.all(dtab[floor:] == 0.0):
        return 1.0 / btab[floor:]
    out = np.empty(len(btab) - floor)
    prev = carry
    for i in range(floor, len(btab)):
        prev = 1.0 / btab[i] + (dtab[i] / btab[i]) * prev
        out[i - floor] = prev
    return out


def _remainder_bound(spec: BirthDeathSpec, r_hi: int, f_hi: float) -> float:
    """Bound on sum_{r > r_hi} f[r]: (integral 1/b + q * f_hi) / (1 - q) with
    q an empirical sup of d_r/b_r beyond r_hi (d/b assumed eventually
    nonincreasing, as in the coupling where d is constant and b superlinear)."""
    from .pde import tail_integral

    probes = np.unique(np.concatenate([
        np.array([r_hi + 1], dtype=float),
        r_hi * np.array([2.0, 4.0, 16.0, 256.0, 65536.0]),
    ]))
    with np.errstate(over="ignore"):  # b may overflow to inf at far probes; q -> 0
        q = float(np.max(np.asarray(spec.d(probes), dtype=float)
                         / np.asarray(spec.b(probes), dtype=float)))
    if not q < 1.0:
        raise NonSummable(f"d_r/b_r = {q} beyond r = {r_hi}")
    one_over_b = tail_integral(spec.b, float(r_hi))
    return (one_over_b + q * f_hi) / (1.0 - q)


def _auto_floor(spec: BirthDeathSpec, r0: int) -> int:
    """Largest r <= r0 with d_r = 0 (exists since d_0 = 0): recursion start
    needing no carry from below."""
    hi = r0
    while hi > 0:
        lo = max(0, hi - 65536)
        dvals = np.asarray(spec.d(np.arange(lo, hi + 1, dtype=float)), dtype=float)
        zeros = np.nonzero(dvals == 0.0)[0]
        if len(zeros):
            return lo + int(zeros[-1])
        hi = lo - 1
    return 0


def expected_explosion_time(spec: BirthDeathSpec, r0: int, tolerance: float,
                            *, floor: int | None = None) -> tuple[float, int, float]:
    """Partial sum of f[r] from r0 with the truncation index pushed until the
    remainder bound is below tolerance.

    Returns (value, truncation_index, tail_bound); NonSummable if the bound
    cannot be driven below tolerance by r <= 10**7.  ``floor`` overrides the
    recursion start (see expected_hitting_times) for chains with b_0 = 0
    whose downward excursions from r0 carry negligible weight.
    """
    if floor is None:
        floor = _auto_floor(spec, r0)
    r_hi = max(2 * r0, r0 + 64)
    btab, dtab = spec.tabulate(r_hi)
    if np.any(btab[floor:] == 0.0):
        raise ZeroBirthRate("zero birth rate on the passage ladder")
    fvals = _recurse(btab, dtab, floor, 0.0)  # states floor..r_hi
    while True:
        f_hi = float(fvals[-1])
        try:
            bound = _remainder_bound(spec, r_hi, f_hi)
        except DivergentTail as exc:
            raise NonSummable(str(exc)) from exc
        if bound < tolerance:
            value = float(fvals[r0 - floor:].sum())
            return value, r_hi, bound
        if r_hi >= 10 ** 7:
            raise NonSummable(
                f"remainder bound {bound} still above {tolerance} at r = {r_hi}")
        new_hi = min(2 * r_hi, 10 ** 7)
        grid = np.arange(r_hi + 1, new_hi + 1, dtype=float)
        bext = np.asarray(spec.b(grid), dtype=float)
        dext = np.asarray(spec.d(grid), dtype=float)
        if np.any(bext == 0.0):
            raise ZeroBirthRate("zero birth rate on the passage ladder")
        ext = _recurse(np.concatenate([[1.0], bext]),
                       np.concatenate([[0.0], dext]), 1, f_hi)
        fvals = np.concatenate([fvals, ext])
        r_hi = new_hi


@lru_cache(maxsize=64)
def _cached_tail(spec: BirthDeathSpec, cap: int) -> float:
    try:
        value, _, _ = expected_explosion_time(spec, cap, tolerance=1e-6)
        return value
    except NonSummable:
        return 0.0


def mc_first_passage(spec: BirthDeathSpec, r0: int, target: int,
                     replicas: int, rng) -> np.ndarray:
    """Vectorized Monte Carlo samples of the first-passage time r0 -> target.

    Independent oracle for the recursion: straight event-driven stepping of
    all replicas in lockstep, no hitting-time formula involved.
    """
    rng = as_generator(rng)
    # the chain can dip below r0; tabulate a generous margin below and fail
    # loudly if a replica escapes it
    btab, dtab = spec.tabulate(target + 1)
    states = np.full(replicas, r0, dtype=np.int64)
    times = np.zeros(replicas)
    active = states < target
    while np.any(active):
        idx = np.nonzero(active)[0]
        s = states[idx]
        b = btab[s]
        d = dtab[s]
        rate = b + d
        if np.any(rate <= 0.0):
            raise ZeroBirthRate("chain froze before reaching the target")
        times[idx] += rng.exponential(1.0, size=len(idx)) / rate
        up = rng.random(len(idx)) * rate < b
        states[idx] = np.where(up, s + 1, np.maximum(s - 1, 0))
        active[idx] = states[idx] < target
    return times


def simulate_bd(spec: BirthDeathSpec, r0: int, cap: int, rng, *,
                tail: float | None = None) -> float:
    """One exact explosion-time sample: simulate until the state reaches cap,
    then add the analytic residual sum_{r >= cap} f[r] (0 if non-summable,
    matching the estimator used for the particle system).

    Returns inf if the chain freezes at a state with zero total rate.
    """
    rng = as_generator(rng)
    btab, dtab = spec.tabulate(cap)
    if tail is None:
        tail = _cached_tail(spec, cap)
    fstate = np.zeros(1)
    istate = np.array([r0], dtype=np.int64)
    feed = UniformFeed(rng, block=1 << 12)
    while True:
        status, used = kernels.run_bd_chunk(btab, dtab, int(cap),
                                            feed.buf, fstate, istate)
        feed.consume(used)
        if status == 2:
            feed.refill()
            continue
        if status == 3:
            return math.inf
        return float(fstate[0]) + tail
