"""Contract tests for the metric-energy space abstraction."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evikit.core import (
    DomainError,
    ExtendedReal,
    StatePoint,
    UsageError,
    check_geodesic_property,
    check_kappa_convexity,
    check_metric_axioms,
    check_noise_identity,
    slope_by_definition,
)
from evikit.potentials import make_potential
from evikit.spaces import (
    AllenCahnDescriptor,
    CirDescriptor,
    QuadraticDescriptor,
    Wasserstein1DDescriptor,
    make_allen_cahn,
    make_cir,
    make_ou,
    make_quadratic,
    make_wasserstein1d,
)

finite_floats = st.floats(min_value=-1e6, max_value=1e6,
                          allow_nan=False, allow_infinity=False)


def all_spaces():
    return [
        make_ou(1.0),
        make_quadratic(QuadraticDescriptor(dimension=3, kappa=0.5)),
        make_cir(CirDescriptor(mu=1.0)),
        make_allen_cahn(AllenCahnDescriptor(
            grid_size=32, length=2 * math.pi, kappa=1.0,
            well=make_potential("quartic"))),
        make_wasserstein1d(Wasserstein1DDescriptor(
            m=64, internal=make_potential("entropy"))),
    ]


# ---------------------------------------------------------------------------
# Extended reals
# ---------------------------------------------------------------------------

class TestExtendedReal:
    def test_infinity_propagates_through_sums(self):
        inf = ExtendedReal.INF
        assert (inf + 3.0).infinite
        assert (ExtendedReal.finite(2.0) + inf).infinite
        assert not (ExtendedReal.finite(1.0) + ExtendedReal.finite(2.0)).infinite

    def test_comparisons_total(self):
        inf = ExtendedReal.INF
        a = ExtendedReal.finite(5.0)
        assert a < inf and a <= inf and inf > a and inf >= a
        assert inf >= inf and inf <= inf

    def test_float_conversion(self):
        assert float(ExtendedReal.finite(2.5)) == 2.5
        assert math.isinf(float(ExtendedReal.INF))

    def test_equality_semantics(self):
        assert ExtendedReal.INF == ExtendedReal.INF
        assert ExtendedReal.finite(1.0) == ExtendedReal.finite(1.0)
        assert ExtendedReal.finite(1.0) != ExtendedReal.INF

    def test_rejects_nonfinite_construction(self):
        with pytest.raises(UsageError):
            ExtendedReal.finite(math.inf)
        with pytest.raises(UsageError):
            ExtendedReal.finite(math.nan)

    def test_negative_scaling_rejected(self):
        with pytest.raises(UsageError):
            ExtendedReal.finite(1.0) * -2.0

    @given(finite_floats, finite_floats)
    @settings(max_examples=200)
    def test_finite_arithmetic_matches_floats(self, a, b):
        x = ExtendedReal.finite(a) + ExtendedReal.finite(b)
        assert x.value == pytest.approx(a + b)
        assert (ExtendedReal.finite(a) <= ExtendedReal.finite(b)) == (a <= b)


# ---------------------------------------------------------------------------
# State points
# ---------------------------------------------------------------------------

class TestStatePoint:
    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(UsageError):
            StatePoint(())
        with pytest.raises(UsageError):
            StatePoint.of([1.0, math.nan])

    def test_json_roundtrip(self):
        p = StatePoint.of([1.0, 2.5])
        assert p.to_json() == [1.0, 2.5]
        assert StatePoint.of(p.to_json()) == p


# ---------------------------------------------------------------------------
# Metric and geodesic contracts
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("space", all_spaces(), ids=lambda s: s.name)
def test_metric_axioms_sampled(space):
    report = check_metric_axioms(space, 1000, np.random.default_rng(7))
    assert report.max_violation <= space.tol_metric


@pytest.mark.parametrize("space", all_spaces(), ids=lambda s: s.name)
def test_geodesic_property_on_grid(space):
    rng = np.random.default_rng(3)
    for _ in range(5):
        p, q = space.sample_point(rng), space.sample_point(rng)
        assert check_geodesic_property(space, p, q) <= space.tol_geo


@pytest.mark.parametrize("space", all_spaces(), ids=lambda s: s.name)
def test_geodesic_endpoints_exact(space):
    rng = np.random.default_rng(5)
    p, q = space.sample_point(rng), space.sample_point(rng)
    assert space.geodesic_point(p, q, 0.0) == p
    assert space.geodesic_point(p, q, 1.0) == q


def test_degenerate_geodesic_is_constant():
    ou = make_ou(1.0)
    p = StatePoint.of(1.3)
    for t in (0.0, 0.3, 1.0):
        assert ou.geodesic_point(p, p, t) == p


def test_geodesic_parameter_out_of_range():
    ou = make_ou(1.0)
    with pytest.raises(UsageError):
        ou.geodesic_point(StatePoint.of(0.0), StatePoint.of(1.0), 1.5)


def test_dimension_mismatch_is_usage_error():
    ou = make_ou(1.0)
    with pytest.raises(UsageError):
        ou.distance(StatePoint.of([1.0, 2.0]), StatePoint.of(1.0))


def test_cir_negative_coordinate_is_domain_error():
    cir = make_cir(CirDescriptor(mu=1.0))
    with pytest.raises(DomainError):
        cir.distance(StatePoint.of(-1.0), StatePoint.of(1.0))


def test_euclidean_geodesic_midpoint():
    ou = make_ou(1.0)
    mid = ou.geodesic_point(StatePoint.of(0.0), StatePoint.of(2.0), 0.5)
    assert mid.x == pytest.approx(1.0)


@given(st.floats(min_value=0.05, max_value=20.0),
       st.floats(min_value=0.05, max_value=20.0))
@settings(max_examples=300, deadline=None)
def test_cir_distance_closed_form(x, y):
    cir = make_cir(CirDescriptor(mu=1.0))
    d = cir.distance(StatePoint.of(x), StatePoint.of(y))
    assert d == pytest.approx(2.0 * abs(math.sqrt(x) - math.sqrt(y)), abs=1e-12)


# ---------------------------------------------------------------------------
# Slope, information and energy identities
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("space", all_spaces(), ids=lambda s: s.name)
def test_information_is_squared_slope(space):
    rng = np.random.default_rng(11)
    for _ in range(10):
        p = space.sample_point(rng)
        s, i = space.slope(p), space.information(p)
        if s.infinite:
            assert i.infinite
        else:
            assert i.value == s.value**2


def test_slope_by_definition_matches_closed_forms():
    cir = make_cir(CirDescriptor(mu=1.0))
    p = StatePoint.of(4.0)
    est = slope_by_definition(cir, lambda z: float(cir.energy(z)), p, scale=1.0)
    assert est == pytest.approx(1.5, abs=1e-5)
    ou = make_ou(1.0)
    est = slope_by_definition(ou, lambda z: float(ou.energy(z)), StatePoint.of(3.0),
                              scale=1.0)
    assert est == pytest.approx(3.0, abs=1e-6)


def test_noise_identity_on_smooth_spaces():
    rng = np.random.default_rng(13)
    for space in (make_ou(1.0), make_cir(CirDescriptor(mu=1.0))):
        pairs = [(space.sample_point(rng), space.sample_point(rng))
                 for _ in range(10)]
        rep = check_noise_identity(space, pairs, rng)
        assert rep.max_violation <= 1e-4


@pytest.mark.parametrize("space", all_spaces(), ids=lambda s: s.name)
def test_kappa_convexity_along_geodesics(space):
    rep = check_kappa_convexity(space, 100, rng=np.random.default_rng(17))
    assert rep.max_violation <= 1e-8
