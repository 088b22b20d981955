"""Calculators for the sample-size constants and learnability bounds.

Every function here is pure.  Integer results are exact Python ints (they
get astronomically large on purpose); an unreachable quantity is reported
as ``math.inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .discovery import (
    DiscoveryFamily,
    divergence_class,
    solve_partial_sum,
    sup_probability,
    total_mass,
)

# Doubling search gives up past 2**MAX_DOUBLINGS and reports infinity.
MAX_DOUBLINGS = 1 << 14


class TheoremInapplicable(ValueError):
    pass


def _check_prob(name: str, x: float):
    if not 0 < x < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {x}")


def _check_positive(**kwargs):
    for name, x in kwargs.items():
        if not x > 0:
            raise ValueError(f"{name} must be positive, got {x}")


def _ceil_mp(x) -> int:
    return int(mpmath.ceil(x))


def k1_rmax(n_states: int, n_actions: int, T: int, rmax: float, eps: float, delta: float) -> int:
    """Visits per pair before R-MAX treats it as known (coefficient 6)."""
    _check_positive(n_states=n_states, n_actions=n_actions, T=T, rmax=rmax, eps=eps)
    _check_prob("delta", delta)
    first = math.ceil(Fraction(4 * n_states * T) * Fraction(rmax) / Fraction(eps)) ** 3
    with mpmath.workdps(50):
        second = _ceil_mp(-6 * mpmath.log(mpmath.mpf(delta) / (6 * n_states * n_actions**2)) ** 3)
    return max(first, second) + 1


def k1_urmax(N: int, k: int, T: int, rmax: float, eps: float, delta: float) -> int:
    """Visits per pair for URMAX; coefficient 8 and log argument 8Nk/delta."""
    _check_positive(N=N, k=k, T=T, rmax=rmax, eps=eps)
    _check_prob("delta", delta)
    first = math.ceil(Fraction(4 * N * T) * Fraction(rmax) / Fraction(eps)) ** 3
    with mpmath.workdps(50):
        second = _ceil_mp(8 * mpmath.log(8 * N * k / mpmath.mpf(delta)) ** 3)
    return max(first, second) + 1


def k0_threshold(N: int, delta: float) -> float:
    return math.log(4 * N / delta)


def k0(fam: DiscoveryFamily, N: int, delta: float) -> int | float:
    """Explore plays per state: the first M whose partial sum of D(1, t)
    reaches ln(4N/delta).  ``math.inf`` when the family never gets there."""
    if N < 1:
        raise ValueError("N must be >= 1")
    _check_prob("delta", delta)
    crossing = solve_partial_sum(fam, 1, k0_threshold(N, delta))
    return math.inf if crossing.steps is None else crossing.steps


def _ceil_scaled_power(x: int, scale: Fraction) -> int:
    """Exact ``ceil(scale * x**1.5)`` for integer x >= 0 and rational scale > 0."""
    a = x**3 * scale.numerator**2
    b = scale.denominator**2
    m = math.isqrt(a // b)
    while m * m * b < a:
        m += 1
    while m > 0 and (m - 1) ** 2 * b >= a:
        m -= 1
    return m


def k2_k3(N: int, k: int, T: int, rmax: float, eps: float, delta: float, K0: int | float) -> tuple[int | float, int]:
    """Replay lengths for one outer round.

    K2 = ceil(2 (N k max(K1(T+1), K0))^{3/2} Rmax / eps)
    K3 = ceil((2 Rmax + 1) max((2 Rmax/eps)^3, 8 ln(4/delta)^3) / eps)
    """
    _check_positive(N=N, k=k, T=T, rmax=rmax, eps=eps)
    _check_prob("delta", delta)
    k1_next = k1_urmax(N, k, T + 1, rmax, eps, delta)
    if K0 == math.inf:
        k2 = math.inf
    else:
        x = N * k * max(k1_next, int(K0))
        k2 = _ceil_scaled_power(x, 2 * Fraction(rmax) / Fraction(eps))
    with mpmath.workdps(50):
        r, e = mpmath.mpf(rmax), mpmath.mpf(eps)
        inner = max((2 * r / e) ** 3, 8 * mpmath.log(4 / mpmath.mpf(delta)) ** 3)
        k3 = _ceil_mp((2 * r + 1) * inner / e)
    return k2, k3


@dataclass(frozen=True)
class BoundFunction:
    """An increasing closed form f(T) used to bound partial sums.

    ``log``: m1 ln(T + shift) + m2; ``loglog``: m1 ln(ln T + 1) + m2;
    ``linear``: m1 T + m2.
    """

    kind: str
    m1: float = 1.0
    m2: float = 0.0
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in ("log", "loglog", "linear"):
            raise ValueError(f"unknown bound function {self.kind!r}")
        if self.m1 <= 0:
            raise ValueError("m1 must be positive for an increasing bound")

    def __call__(self, T) -> float:
        if self.kind == "linear":
            return self.m1 * T + self.m2
        if self.kind == "log":
            arg = T + self.shift if T < 2**1000 else T
            return self.m1 * math.log(arg) + self.m2
        return self.m1 * math.log(math.log(T) + 1) + self.m2

    def precise(self, T):
        """f(T) as an mpmath number carrying enough bits to separate T from T + 1."""
        with mpmath.workprec(max(int(T).bit_length(), 64) + 64):
            T = mpmath.mpf(T)
            if self.kind == "linear":
                return self.m1 * T + self.m2
            if self.kind == "log":
                return self.m1 * mpmath.log(T + self.shift) + self.m2
            return self.m1 * mpmath.log(mpmath.log(T) + 1) + self.m2

    def inverse(self, y: float):
        """Closed-form real inverse, as an mpmath number."""
        y = mpmath.mpf(y)
        if self.kind == "linear":
            return (y - self.m2) / self.m1
        if self.kind == "log":
            return mpmath.exp((y - self.m2) / self.m1) - self.shift
        return mpmath.exp(mpmath.exp((y - self.m2) / self.m1) - 1)


def invert_increasing(f, target: float) -> int | float:
    """Smallest integer t >= 1 with f(t) >= target, by doubling then bisection."""
    if f(1) >= target:
        return 1
    lo, hi = 1, 2
    doublings = 0
    while f(hi) < target:
        lo, hi = hi, hi * 2
        doublings += 1
        if doublings > MAX_DOUBLINGS:
            return math.inf
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if f(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def lower_bound_target(c: float, delta: float) -> float:
    return c * math.log(delta) / math.log(1 - c)


def lower_bound_steps(f: BoundFunction | DiscoveryFamily, c: float, delta: float) -> int | float:
    """Fewest steps any learner needs to find the hidden action with
    probability 1 - delta: the smallest t with f(t) >= c ln(delta)/ln(1-c).

    ``f`` is an upper bound on the partial sums of D(1, t), either a
    closed form or a family (in which case its own partial sums are used).
    """
    _check_prob("c", c)
    _check_prob("delta", delta)
    target = lower_bound_target(c, delta)
    if isinstance(f, DiscoveryFamily):
        crossing = solve_partial_sum(f, 1, target)
        return math.inf if crossing.steps is None else crossing.steps
    return invert_increasing(f.precise, target)


def impossibility_gap(fam: DiscoveryFamily, r1: float, r2: float) -> tuple[float, float]:
    """Probability ``d`` that the hidden action is never found, and the
    resulting reward gap ``c = d (r2 - r1)`` no learner can close.

    d = (1 - c1)^(sum_t D(1,t) / c1) with c1 = sup_t D(1,t); d = 1 if c1 = 0.
    """
    if not r2 > r1:
        raise ValueError("need r2 > r1")
    mass = total_mass(fam, 1)
    if not math.isfinite(mass):
        raise TheoremInapplicable("theorem inapplicable: partial sums of D(1, t) diverge")
    c1 = sup_probability(fam)
    if c1 >= 1:
        raise TheoremInapplicable("theorem inapplicable: D(1, t) reaches 1")
    d = 1.0 if c1 == 0 else (1 - c1) ** (mass / c1)
    return d, d * (r2 - r1)


def k0_upper_bound_check(fam: DiscoveryFamily, f: BoundFunction, N: int, delta: float) -> bool:
    """Whether K0 <= f^{-1}(ln(4N/delta)) for a lower bound f of the partial sums."""
    bound = invert_increasing(f.precise, k0_threshold(N, delta))
    return k0(fam, N, delta) <= bound


@dataclass(frozen=True)
class BoundSet:
    k0: int | float
    k1: int
    k2: int | float
    k3: int
    inputs: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)


def bound_set(fam: DiscoveryFamily, N: int, k: int, T: int, rmax: float, eps: float, delta: float) -> BoundSet:
    crossing = solve_partial_sum(fam, 1, k0_threshold(N, delta))
    K0 = math.inf if crossing.steps is None else crossing.steps
    k2, k3 = k2_k3(N, k, T, rmax, eps, delta, K0)
    return BoundSet(
        k0=K0,
        k1=k1_urmax(N, k, T, rmax, eps, delta),
        k2=k2,
        k3=k3,
        inputs={"family": fam.to_dict(), "N": N, "k": k, "T": T, "rmax": rmax, "epsilon": eps, "delta": delta},
        flags={
            "k0_infinite": K0 == math.inf,
            "k0_approximate": crossing.approximate,
            "divergence": divergence_class(fam).name,
        },
    )
