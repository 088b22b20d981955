"""Discovery-probability families D(j, t) and the quantities derived from them.

``D(j, t)`` is the chance that one play of the explore action reveals a new
action when ``j`` actions are still hidden at the state and the previous
``t - 1`` explore plays there found nothing.  Everything downstream (the
environment, K0, the lower bounds) only needs four things from a family:
pointwise values, running non-discovery products, partial sums, and how
fast those partial sums grow.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any

import mpmath
import numpy as np

FAMILY_KINDS = ("constant", "power", "harmonic_j", "log_harmonic", "table")

# Partial sums are accumulated exactly up to this many terms; past it the
# crossing search switches to an integral tail estimate.
EXACT_TERM_CAP = 1 << 24
UNDERFLOW_FLOOR = 1e-300


@dataclass(frozen=True)
class DiscoveryFamily:
    """A parametric discovery-probability function.

    ``params`` holds ``c`` (constant), ``alpha`` (power), ``m1``
    (log_harmonic) or ``values`` / ``values_by_j`` (table).  Use the
    classmethod constructors rather than building one by hand.
    """

    kind: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown discovery family {self.kind!r}")
        p = self.params
        if self.kind == "constant":
            c = float(p["c"])
            if not 0.0 <= c <= 1.0:
                raise ValueError(f"constant family needs 0 <= c <= 1, got {c}")
        elif self.kind == "power":
            if float(p["alpha"]) < 0:
                raise ValueError("power family needs alpha >= 0")
        elif self.kind == "log_harmonic":
            if float(p["m1"]) <= 0:
                raise ValueError("log_harmonic family needs m1 > 0")
        elif self.kind == "table":
            rows = self.rows
            if not rows or not all(rows):
                raise ValueError("table family needs at least one value")
            for row in rows:
                for v in row:
                    if not 0.0 <= v <= 1.0:
                        raise ValueError(f"table value {v} outside [0, 1]")

    @classmethod
    def constant(cls, c: float) -> DiscoveryFamily:
        return cls("constant", {"c": float(c)})

    @classmethod
    def power(cls, alpha: float) -> DiscoveryFamily:
        return cls("power", {"alpha": float(alpha)})

    @classmethod
    def harmonic_j(cls) -> DiscoveryFamily:
        return cls("harmonic_j", {})

    @classmethod
    def log_harmonic(cls, m1: float) -> DiscoveryFamily:
        return cls("log_harmonic", {"m1": float(m1)})

    @classmethod
    def table(cls, values=None, values_by_j=None) -> DiscoveryFamily:
        if (values is None) == (values_by_j is None):
            raise ValueError("table family needs exactly one of values / values_by_j")
        if values is not None:
            return cls("table", {"values": tuple(float(v) for v in values)})
        return cls("table", {"values_by_j": tuple(tuple(float(v) for v in row) for row in values_by_j)})

    @property
    def rows(self) -> tuple[tuple[float, ...], ...]:
        """Table rows indexed by ``j - 1``; the last row is reused for larger j."""
        if "values" in self.params:
            return (tuple(self.params["values"]),)
        return tuple(tuple(r) for r in self.params["values_by_j"])

    def __hash__(self):
        return hash((self.kind, tuple(sorted((k, repr(v)) for k, v in self.params.items()))))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"family": self.kind}
        for key, value in self.params.items():
            if isinstance(value, tuple):
                value = [list(v) if isinstance(v, tuple) else v for v in value]
            out[key] = value
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> DiscoveryFamily:
        kind = data["family"]
        if kind == "constant":
            return cls.constant(data["c"])
        if kind == "power":
            return cls.power(data["alpha"])
        if kind == "harmonic_j":
            return cls.harmonic_j()
        if kind == "log_harmonic":
            return cls.log_harmonic(data["m1"])
        if kind == "table":
            return cls.table(values=data.get("values"), values_by_j=data.get("values_by_j"))
        raise ValueError(f"unknown discovery family {kind!r}")


def _terms(fam: DiscoveryFamily, j: int, t: np.ndarray) -> np.ndarray:
    """Vectorised D(j, t) for an integer array ``t >= 1``."""
    t = np.asarray(t, dtype=np.float64)
    kind = fam.kind
    if kind == "constant":
        out = np.full(t.shape, fam.params["c"])
    elif kind == "power":
        out = (t + 1.0) ** (-fam.params["alpha"])
    elif kind == "harmonic_j":
        out = 1.0 / (t + j)
    elif kind == "log_harmonic":
        out = fam.params["m1"] / (t * (np.log(t) + 1.0))
    else:
        row = fam.rows[min(j, len(fam.rows)) - 1]
        vals = np.asarray(row)
        idx = t.astype(np.int64) - 1
        out = np.where(idx < len(vals), vals[np.minimum(idx, len(vals) - 1)], 0.0)
    return np.clip(out, 0.0, 1.0)


def discovery_prob(fam: DiscoveryFamily, j: int, t: int) -> float:
    """D(j, t), clamped to [0, 1]."""
    if j < 1:
        raise ValueError("discovery probability is only defined for j >= 1 hidden actions")
    if t < 1:
        raise ValueError("t counts explore plays and starts at 1")
    # Same kernel as the vectorised sums: libm and numpy pow can differ by an ulp.
    return float(_terms(fam, j, np.array([t]))[0])


# -- compensated products ---------------------------------------------------

_SPLITTER = 134217729.0  # 2**27 + 1


def _two_prod(a: float, b: float) -> tuple[float, float]:
    p = a * b
    c = _SPLITTER * a
    ah = c - (c - a)
    al = a - ah
    c = _SPLITTER * b
    bh = c - (c - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


@dataclass(frozen=True)
class NonDiscovery:
    """Probability that ``t`` explore plays all fail.

    ``value`` is 0.0 with ``underflow`` set once the linear-space product
    drops below 1e-300; ``log_value`` stays finite in that case.
    """

    value: float
    log_value: float
    underflow: bool = False


def nondiscovery_curve(fam: DiscoveryFamily, j: int, t_max: int) -> np.ndarray:
    """Products ``prod_{t'<=t} (1 - D(j, t'))`` for every ``t = 0 .. t_max``.

    Each factor is carried as an exact hi/lo pair and the running product is
    compensated, so the result is accurate to a few ulps even for 10^4+ terms.
    """
    if j < 1:
        raise ValueError("j must be >= 1")
    d = _terms(fam, j, np.arange(1, t_max + 1))
    out = np.empty(t_max + 1)
    out[0] = 1.0
    p, e = 1.0, 0.0
    for i, di in enumerate(d.tolist(), start=1):
        hi = 1.0 - di
        lo = (1.0 - hi) - di
        prev = p
        p, err = _two_prod(p, hi)
        e = e * (hi + lo) + err + prev * lo
        v = p + e
        if v < UNDERFLOW_FLOOR:
            out[i:] = 0.0
            break
        out[i] = v
    return out


def nondiscovery_product_detail(fam: DiscoveryFamily, j: int, t: int) -> NonDiscovery:
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return NonDiscovery(1.0, 0.0)
    d = _terms(fam, j, np.arange(1, t + 1))
    log_value = math.fsum(np.log1p(-d).tolist()) if np.all(d < 1.0) else -math.inf
    value = float(nondiscovery_curve(fam, j, t)[-1])
    underflow = value == 0.0 and log_value > -math.inf
    return NonDiscovery(value, log_value, underflow)


def nondiscovery_product(fam: DiscoveryFamily, j: int, t: int) -> float:
    """``prod_{t'=1..t} (1 - D(j, t'))``; 1.0 for ``t == 0``."""
    return nondiscovery_product_detail(fam, j, t).value


# -- partial sums -----------------------------------------------------------


def partial_sum(fam: DiscoveryFamily, j: int, T: int) -> float:
    """``sum_{t=1..T} D(j, t)``, correctly rounded (math.fsum over the terms)."""
    if T < 0:
        raise ValueError("T must be >= 0")
    if T == 0:
        return 0.0
    if fam.kind == "constant":
        return fam.params["c"] * T
    if fam.kind == "table":
        row = fam.rows[min(j, len(fam.rows)) - 1]
        return math.fsum(row[:T])
    chunk = 1 << 20
    stream = (
        _terms(fam, j, np.arange(start, min(T, start + chunk - 1) + 1)).tolist()
        for start in range(1, T + 1, chunk)
    )
    return math.fsum(itertools.chain.from_iterable(stream))


def total_mass(fam: DiscoveryFamily, j: int = 1) -> float:
    """``sum_{t>=1} D(j, t)``; ``inf`` for divergent families."""
    kind = fam.kind
    if kind == "constant":
        return 0.0 if fam.params["c"] == 0 else math.inf
    if kind == "power":
        alpha = fam.params["alpha"]
        if alpha <= 1:
            return math.inf
        return float(mpmath.zeta(alpha, 2))
    if kind == "table":
        return math.fsum(fam.rows[min(j, len(fam.rows)) - 1])
    return math.inf


def sup_probability(fam: DiscoveryFamily) -> float:
    """``sup_t D(1, t)``; every non-table family attains it at t = 1."""
    if fam.kind == "table":
        return max(fam.rows[0])
    return discovery_prob(fam, 1, 1)


@dataclass(frozen=True)
class Crossing:
    """Smallest ``M`` with ``partial_sum(fam, j, M) >= target``.

    ``steps`` is None when the target is never reached.  ``approximate`` is
    set when the crossing lies past ``EXACT_TERM_CAP`` and was located with an
    integral tail estimate instead of exact accumulation.
    """

    steps: int | None
    target: float
    approximate: bool = False


def _antiderivative(fam: DiscoveryFamily, j: int):
    """(F, F^-1) over mpmath for the smooth tail of a family, or None."""
    kind = fam.kind
    if kind == "power":
        a = mpmath.mpf(fam.params["alpha"])
        if a == 1:
            return (lambda x: mpmath.log(x + 1)), (lambda y: mpmath.exp(y) - 1)
        return (
            (lambda x: (x + 1) ** (1 - a) / (1 - a)),
            (lambda y: ((1 - a) * y) ** (1 / (1 - a)) - 1),
        )
    if kind == "harmonic_j":
        return (lambda x: mpmath.log(x + j)), (lambda y: mpmath.exp(y) - j)
    if kind == "log_harmonic":
        m1 = mpmath.mpf(fam.params["m1"])
        return (
            (lambda x: m1 * mpmath.log(mpmath.log(x) + 1)),
            (lambda y: mpmath.exp(mpmath.exp(y / m1) - 1)),
        )
    return None


def solve_partial_sum(fam: DiscoveryFamily, j: int, target: float) -> Crossing:
    """Invert the partial sums: minimal ``M >= 1`` with ``S(M) >= target``."""
    if target <= 0:
        return Crossing(1, target)
    if total_mass(fam, j) < target:
        return Crossing(None, target)
    if fam.kind == "constant":
        c = fam.params["c"]
        m = max(1, math.ceil(target / c))
        while m > 1 and c * (m - 1) >= target:
            m -= 1
        while c * m < target:
            m += 1
        return Crossing(m, target)

    n = 1024
    while True:
        n = min(n, EXACT_TERM_CAP)
        terms = _terms(fam, j, np.arange(1, n + 1))
        approx = np.cumsum(terms)
        if approx[-1] >= target * (1 - 1e-9):
            m0 = int(np.searchsorted(approx, target * (1 - 1e-9))) + 1
            return Crossing(_refine_crossing(terms, m0, target), target)
        if n == EXACT_TERM_CAP:
            break
        n *= 4

    fns = _antiderivative(fam, j)
    if fns is None:
        return Crossing(None, target)
    F, F_inv = fns
    with mpmath.workdps(40):
        base = math.fsum(terms.tolist())
        y = F(mpmath.mpf(n) + 0.5) + (target - base)
        x = F_inv(y) - mpmath.mpf("0.5")
        return Crossing(int(mpmath.ceil(x)), target, approximate=True)


def _refine_crossing(terms: np.ndarray, m0: int, target: float) -> int:
    """Exact search for the crossing near a float-cumsum candidate."""
    m = max(1, m0 - 2)
    while math.fsum(terms[:m].tolist()) < target:
        m += 1
    return m


# -- growth classification --------------------------------------------------

DIVERGENCE_CLASSES = ("convergent", "loglog", "log", "linear", "unknown-numeric")
WITNESS_HORIZONS = (100, 10_000, 1_000_000)


@dataclass(frozen=True)
class DivergenceClass:
    name: str
    witness: tuple[tuple[int, float], ...]


def divergence_class(fam: DiscoveryFamily) -> DivergenceClass:
    """Growth rate of ``sum_t D(1, t)``, decided from the family's form.

    Partial sums at 10^2, 10^4 and 10^6 ride along as a witness; they never
    influence the verdict.
    """
    kind = fam.kind
    if kind == "constant":
        name = "linear" if fam.params["c"] > 0 else "convergent"
    elif kind == "power":
        alpha = fam.params["alpha"]
        if alpha > 1:
            name = "convergent"
        elif alpha == 1:
            name = "log"
        elif alpha == 0:
            name = "linear"
        else:
            name = "unknown-numeric"
    elif kind == "harmonic_j":
        name = "log"
    elif kind == "log_harmonic":
        name = "loglog"
    else:
        name = "convergent"
    witness = tuple((T, partial_sum(fam, 1, T)) for T in WITNESS_HORIZONS)
    return DivergenceClass(name, witness)


def is_monotone_in_j(fam: DiscoveryFamily, j_max: int = 32, t_max: int = 10_000) -> bool:
    """Whether D(j, t) is nondecreasing in j on the grid j <= j_max, t <= t_max.

    harmonic_j fails this by construction: it is the family built to show
    what goes wrong without the assumption.
    """
    t = np.arange(1, t_max + 1)
    prev = _terms(fam, 1, t)
    for j in range(2, j_max + 1):
        cur = _terms(fam, j, t)
        if np.any(cur < prev):
            return False
        prev = cur
    return True
