import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdpu.discovery import (
    DiscoveryFamily,
    discovery_prob,
    divergence_class,
    is_monotone_in_j,
    nondiscovery_curve,
    nondiscovery_product,
    nondiscovery_product_detail,
    partial_sum,
    solve_partial_sum,
    sup_probability,
    total_mass,
)

from oracles import first_crossing_exact, harmonic_partial

families = st.one_of(
    st.floats(0.0, 1.0).map(DiscoveryFamily.constant),
    st.floats(0.0, 3.0).map(DiscoveryFamily.power),
    st.just(DiscoveryFamily.harmonic_j()),
    st.floats(0.05, 4.0).map(DiscoveryFamily.log_harmonic),
    st.lists(st.floats(0.0, 1.0), min_size=1, max_size=6).map(lambda v: DiscoveryFamily.table(values=v)),
)

divergent = st.one_of(
    st.floats(0.05, 1.0).map(DiscoveryFamily.constant),
    st.floats(0.0, 1.0).map(DiscoveryFamily.power),
    st.just(DiscoveryFamily.harmonic_j()),
)


def test_rejects_bad_indices():
    fam = DiscoveryFamily.power(2)
    with pytest.raises(ValueError):
        discovery_prob(fam, 0, 1)
    with pytest.raises(ValueError):
        discovery_prob(fam, 1, 0)


def test_rejects_bad_parameters():
    with pytest.raises(ValueError):
        DiscoveryFamily.constant(1.5)
    with pytest.raises(ValueError):
        DiscoveryFamily.log_harmonic(0)
    with pytest.raises(ValueError):
        DiscoveryFamily.table(values=[0.2, 1.2])


def test_known_values():
    assert discovery_prob(DiscoveryFamily.power(2), 1, 1) == 0.25
    assert discovery_prob(DiscoveryFamily.harmonic_j(), 3, 2) == pytest.approx(1 / 5)
    # m1 / (t (ln t + 1)) at t = 1 is m1 itself, clamped to 1
    assert discovery_prob(DiscoveryFamily.log_harmonic(3), 1, 1) == 1.0
    assert discovery_prob(DiscoveryFamily.table(values_by_j=[[0.5], [0.1, 0.2]]), 5, 2) == 0.2
    assert discovery_prob(DiscoveryFamily.table(values=[0.5]), 1, 7) == 0.0


@given(families, st.integers(1, 6), st.integers(1, 10**6))
def test_probability_in_unit_interval(fam, j, t):
    assert 0.0 <= discovery_prob(fam, j, t) <= 1.0


@settings(max_examples=50)
@given(families, st.integers(1, 4), st.integers(1, 300))
def test_product_nonincreasing_and_bounded(fam, j, t):
    curve = nondiscovery_curve(fam, j, t)
    assert curve[0] == 1.0
    assert all(0.0 <= v <= 1.0 for v in curve)
    assert all(b <= a + 1e-15 for a, b in zip(curve, curve[1:]))


def test_power2_product_matches_closed_form():
    curve = nondiscovery_curve(DiscoveryFamily.power(2), 1, 10_000)
    worst = max(abs(curve[t] - (t + 2) / (2 * (t + 1))) for t in range(1, 10_001))
    assert worst <= 1e-12


def test_harmonic_product_matches_closed_form():
    for j in range(1, 9):
        curve = nondiscovery_curve(DiscoveryFamily.harmonic_j(), j, 10_000)
        worst = max(abs(curve[t] - j / (t + j)) for t in range(1, 10_001))
        assert worst <= 1e-12


def test_product_single_value_agrees_with_curve():
    fam = DiscoveryFamily.log_harmonic(0.5)
    assert nondiscovery_product(fam, 1, 777) == nondiscovery_curve(fam, 1, 777)[777]
    assert nondiscovery_product(fam, 1, 0) == 1.0


def test_underflow_is_flagged():
    detail = nondiscovery_product_detail(DiscoveryFamily.constant(0.9), 1, 400)
    assert detail.value == 0.0 and detail.underflow
    assert detail.log_value == pytest.approx(400 * math.log(0.1))


def test_certain_discovery_gives_zero_without_underflow():
    detail = nondiscovery_product_detail(DiscoveryFamily.constant(1.0), 1, 3)
    assert detail.value == 0.0 and not detail.underflow and detail.log_value == -math.inf


def test_partial_sum_harmonic_exact():
    for T in (1, 10, 500):
        assert partial_sum(DiscoveryFamily.power(1), 1, T) == float(harmonic_partial(T))


@settings(max_examples=40)
@given(families, st.integers(0, 2000))
def test_partial_sum_against_rational_oracle(fam, T):
    terms = [Fraction(discovery_prob(fam, 1, t)) for t in range(1, T + 1)]
    assert partial_sum(fam, 1, T) == float(sum(terms, Fraction(0)))


def test_total_mass():
    assert total_mass(DiscoveryFamily.power(2)) == pytest.approx(math.pi**2 / 6 - 1, abs=1e-15)
    assert total_mass(DiscoveryFamily.power(3)) == pytest.approx(float(mpmath.zeta(3)) - 1, abs=1e-15)
    assert total_mass(DiscoveryFamily.constant(0)) == 0.0
    assert total_mass(DiscoveryFamily.table(values=[0.5, 0.25])) == 0.75
    for fam in (DiscoveryFamily.power(1), DiscoveryFamily.harmonic_j(), DiscoveryFamily.constant(0.1)):
        assert total_mass(fam) == math.inf


def test_sup_probability():
    assert sup_probability(DiscoveryFamily.power(2)) == 0.25
    assert sup_probability(DiscoveryFamily.harmonic_j()) == 0.5
    assert sup_probability(DiscoveryFamily.table(values=[0.1, 0.7, 0.2])) == 0.7


@settings(max_examples=60)
@given(divergent, st.floats(0.01, 12.0))
def test_crossing_is_minimal(fam, target):
    c = solve_partial_sum(fam, 1, target)
    assert c.steps is not None and not c.approximate
    assert partial_sum(fam, 1, c.steps) >= target
    assert partial_sum(fam, 1, c.steps - 1) < target


def test_crossing_matches_direct_summation():
    fam = DiscoveryFamily.log_harmonic(1.0)
    expected = first_crossing_exact(lambda t: discovery_prob(fam, 1, t), 2.5)
    assert solve_partial_sum(fam, 1, 2.5).steps == expected


def test_crossing_unreachable_for_small_mass():
    assert solve_partial_sum(DiscoveryFamily.power(2), 1, 0.7).steps is None
    assert solve_partial_sum(DiscoveryFamily.table(values=[0.3, 0.3]), 1, 0.61).steps is None
    assert solve_partial_sum(DiscoveryFamily.table(values=[0.3, 0.3]), 1, 0.6).steps == 2


def test_crossing_past_exact_cap_is_flagged():
    c = solve_partial_sum(DiscoveryFamily.log_harmonic(1.0), 1, math.log(4 / 0.1))
    assert c.approximate and c.steps > 1 << 24


def test_divergence_classes():
    cases = {
        "linear": DiscoveryFamily.constant(0.3),
        "log": DiscoveryFamily.power(1),
        "loglog": DiscoveryFamily.log_harmonic(1.0),
        "convergent": DiscoveryFamily.power(2),
        "unknown-numeric": DiscoveryFamily.power(0.5),
    }
    for name, fam in cases.items():
        cls = divergence_class(fam)
        assert cls.name == name
        assert len(cls.witness) == 3
    assert divergence_class(DiscoveryFamily.harmonic_j()).name == "log"


def test_monotonicity_in_j():
    assert is_monotone_in_j(DiscoveryFamily.power(2), j_max=4, t_max=200)
    # more hidden actions make each try less likely to succeed here
    assert not is_monotone_in_j(DiscoveryFamily.harmonic_j(), j_max=4, t_max=200)


@given(families)
def test_dict_round_trip(fam):
    assert DiscoveryFamily.from_dict(fam.to_dict()) == fam
