import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kahlerlag.errors import HypothesisError, KahlerLagError, NotHolomorphicError
from kahlerlag.holo_fields import (
    cpn_torus_generator,
    corollary_moment_formula,
    covariant_derivative,
    directional,
    divergence,
    divergence_oracle,
    euler_field,
    expression_field,
    expression_function,
    field_basis,
    holomorphy_residual,
    linear_combination,
    moment_map_check,
    moment_map_value,
    projective_linear_field,
    scale_field,
)
from kahlerlag.kahler_core import ChartPoint, einstein_constant, flat_model, projective_model, sample_points


def P(*z, chart=0):
    return ChartPoint(chart, np.array(z, dtype=complex))


# -- holomorphy ------------------------------------------------------------------------


def test_holomorphy_residual_examples(flat1, cp2):
    assert holomorphy_residual(expression_field(["z1"], 1), [P(0.3 + 0.1j)]) < 1e-12
    r = holomorphy_residual(expression_field(["zb1"], 1), [P(0.3 + 0.1j)])
    assert r == pytest.approx(1.0, abs=1e-9)
    pts = sample_points(cp2, 50, seed=4)
    assert max(holomorphy_residual(V, pts) for V in field_basis(cp2)) < 1e-10


def test_basis_sizes_and_rank(cp1, cp2, flat2):
    assert len(field_basis(cp1)) == 6
    assert len(field_basis(cp2)) == 16
    assert field_basis(cp2).rank(cp2) == 16
    assert field_basis(cp1).rank(cp1) == 6
    assert field_basis(flat2).rank(flat2) == 12


# -- torus generators ------------------------------------------------------------------


def test_cp1_generator_closed_form(cp1):
    V = cpn_torus_generator(cp1, 1, 2)
    for w in (0.3 + 0.4j, -1.2j, 2.0):
        assert V.values(0, np.array([w]))[0] == pytest.approx(-2j * w, abs=1e-15)
    assert V.values(0, np.array([0.0]))[0] == 0


def test_generator_inversion(cp2):
    z = np.array([0.3 + 0.2j, -0.5j])
    for chart in range(3):
        a = cpn_torus_generator(cp2, 1, 2).jet(chart, z)
        b = cpn_torus_generator(cp2, 2, 1).jet(chart, z)
        assert np.allclose(a[0], -b[0]) and np.allclose(a[1], -b[1])


def test_generator_errors(cp2, flat2):
    with pytest.raises(IndexError):
        cpn_torus_generator(cp2, 1, 4)
    with pytest.raises(IndexError):
        cpn_torus_generator(cp2, 2, 2)
    with pytest.raises(KahlerLagError):
        cpn_torus_generator(flat2, 1, 2)


def test_generator_holomorphic_all_charts(cp2):
    V = cpn_torus_generator(cp2, 1, 3)
    pts = [P(0.2 + 0.3j, -0.7, chart=c) for c in range(3)]
    assert holomorphy_residual(V, pts) < 1e-12


def test_projective_field_transforms_between_charts(cp2):
    rng = np.random.default_rng(0)
    A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    V = projective_linear_field(2, A, "A")
    z = np.array([0.4 + 0.1j, 0.6 - 0.2j])
    for dst in (1, 2):
        w, J = cp2.transition(0, dst, z)
        assert np.allclose(J @ V.values(0, z), V.values(dst, w), atol=1e-13)


# -- divergence -------------------------------------------------------------------------


def test_flat_divergence_examples(flat1, flat2):
    assert divergence(flat2, euler_field(2), P(0.3, 1j)) == pytest.approx(2.0)
    V = expression_field(["z1**2"], 1)
    assert divergence(flat1, V, P(0.7 - 0.2j)) == pytest.approx(2 * (0.7 - 0.2j))


def test_divergence_rejects_non_holomorphic(flat1):
    with pytest.raises(NotHolomorphicError):
        divergence(flat1, expression_field(["zb1"], 1), P(0.3))


def test_divergence_oracle_and_j_linearity(cp2):
    V = linear_combination(list(field_basis(cp2)), np.linspace(-1, 1, 16), "mix")
    p = P(0.3 + 0.2j, -0.4 + 0.1j, chart=1)
    oracle, comm = divergence_oracle(cp2, V, p)
    assert abs(oracle - divergence(cp2, V, p)) < 1e-8
    assert comm < 1e-8


def test_j_linearity_detects_non_holomorphic(flat1):
    cd = covariant_derivative(flat1, expression_field(["zb1"], 1), P(0.2))
    assert cd.commutator_norm > 0.5


def test_divergence_scale_invariant(cp2, cp2_unit):
    for V in list(field_basis(cp2))[::3]:
        for p in sample_points(cp2, 5, seed=8):
            assert abs(divergence(cp2, V, p) - divergence(cp2_unit, V, p)) < 1e-9


def test_torus_generator_divergence_closed_form(cp2):
    V = cpn_torus_generator(cp2, 1, 2)
    for p in sample_points(cp2, 20, seed=1):
        f = corollary_moment_formula(cp2, p.chart, p.coords)
        assert 1j * divergence(cp2, V, p) == pytest.approx(3 * f, abs=1e-12)


# -- product rule -----------------------------------------------------------------------


def test_scale_field_examples(flat1):
    D = expression_field(["1"], 1)
    f = expression_function("z1", 1)
    assert divergence(flat1, scale_field(D, f), P(0.4j)) == pytest.approx(1.0)
    V = expression_field(["z1"], 1)
    g = expression_function("z1**2", 1)
    assert divergence(flat1, scale_field(V, g), P(2.0)) == pytest.approx(12.0)
    one = expression_function("1", 1)
    z = np.array([0.3 - 0.1j])
    assert np.allclose(scale_field(V, one).jet(0, z)[0], V.jet(0, z)[0])


def test_scale_field_rejects_antiholomorphic(flat1):
    with pytest.raises(NotHolomorphicError):
        scale_field(euler_field(1), expression_function("zb1", 1), points=[P(0.5)])


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False), min_size=3, max_size=3),
    st.integers(0, 15),
    st.complex_numbers(max_magnitude=0.9, allow_nan=False, allow_infinity=False),
    st.complex_numbers(max_magnitude=0.9, allow_nan=False, allow_infinity=False),
)
def test_product_rule(coeffs, idx, z1, z2):
    model = projective_model(2)
    V = list(field_basis(model))[idx]
    c0, c1, c2 = coeffs
    f = expression_function(f"({c0!r}) + ({c1!r})*z1 + ({c2!r})*z1*z2**2", 2)
    p = P(z1, z2)
    lhs = divergence(model, scale_field(V, f), p)
    fv = f(0, p.coords)[0]
    rhs = fv * divergence(model, V, p) + directional(V, f, 0, p.coords)
    assert abs(lhs - rhs) < 1e-8


# -- moment map identity -------------------------------------------------------------


@pytest.mark.parametrize("name", ["CPn-t1", "CPn-unit"])
def test_moment_map_cp1(name):
    m = projective_model(1, "t1" if name == "CPn-t1" else "unit")
    rep = moment_map_check(m, cpn_torus_generator(m, 1, 2), sample_points(m, 100, seed=0))
    assert rep.max_residual < 1e-6
    assert rep.verdict


def test_moment_map_flat_rejected(flat2):
    with pytest.raises(HypothesisError, match="t=0"):
        moment_map_check(flat2, euler_field(2), [P(0.1, 0.2)])


def test_moment_map_requires_isometry(cp2):
    E12 = field_basis(cp2).fields[0]
    with pytest.raises(HypothesisError, match="isometry"):
        moment_map_check(cp2, E12, [P(0.3, 0.2)])


def test_moment_map_equals_formula_unit_normalization(cp2_unit):
    # with Ric = (n+1) omega the moment map of T(1,2) is the homogeneous formula itself
    t = einstein_constant(cp2_unit).t
    V = cpn_torus_generator(cp2_unit, 1, 2)
    for p in sample_points(cp2_unit, 50, seed=2):
        mu = moment_map_value(cp2_unit, V, p.chart, p.coords, t)
        assert abs(mu - corollary_moment_formula(cp2_unit, p.chart, p.coords)) < 1e-8
