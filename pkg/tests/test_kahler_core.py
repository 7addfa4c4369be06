import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kahlerlag.errors import DegenerateMetricError, DomainError
from kahlerlag.kahler_core import (
    ChartPoint,
    canonical_conn_coeff,
    christoffel_at,
    einstein_constant,
    form_matrix,
    kahler_form_eval,
    load_model,
    metric_at,
    projective_model,
    ricci_form_at,
    sample_points,
    symbolic_model,
)

coord = st.floats(-1.5, 1.5, allow_nan=False)


def P(*z, chart=0):
    return ChartPoint(chart, np.array(z, dtype=complex))


# -- metric ---------------------------------------------------------------------


def test_flat_metric_is_identity(flat2):
    jet = metric_at(flat2, P(0.3 + 0.2j, -1.0))
    assert np.allclose(jet.g, np.eye(2))
    assert np.all(jet.dg == 0)


@pytest.mark.parametrize("w, expected", [(0.0, 2.0), (1.0, 0.5)])
def test_cp1_metric_values(cp1, w, expected):
    assert metric_at(cp1, P(w)).g[0, 0] == pytest.approx(expected, abs=1e-15)


def test_cp1_metric_matches_potential_second_difference(cp1):
    # g = d^2 K / dz dzbar = (1/4) Laplacian K
    h = 1e-3
    K = lambda x, y: cp1.potential(0, np.array([x + 1j * y]))  # noqa: E731
    lap = (K(1 + h, 0) + K(1 - h, 0) + K(1, h) + K(1, -h) - 4 * K(1, 0)) / h**2
    assert lap / 4 == pytest.approx(0.5, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(coord, coord, coord, coord, st.integers(0, 2))
def test_metric_hermitian_positive(x1, y1, x2, y2, chart):
    model = projective_model(2)
    g = metric_at(model, P(x1 + 1j * y1, x2 + 1j * y2, chart=chart)).g
    assert np.max(np.abs(g - g.conj().T)) < 1e-12
    assert np.linalg.eigvalsh(g).min() > 0


def test_kahler_symmetry_of_metric_derivative(cp2, rng):
    for p in sample_points(cp2, 20, seed=3):
        dg = metric_at(cp2, p).dg  # (c, a, b)
        assert np.max(np.abs(dg - np.swapaxes(dg, 0, 1))) < 1e-12


def test_chart_consistency(cp2):
    worst = 0.0
    for p in sample_points(cp2, 100, seed=7, radius=0.8):
        for dst in range(3):
            if dst == p.chart:
                continue
            Z = cp2.to_homogeneous(p.chart, p.coords)
            if abs(Z[dst]) < 0.2:
                continue
            w, J = cp2.transition(p.chart, dst, p.coords)
            g_src = cp2.metric(p.chart, p.coords)
            g_dst = cp2.metric(dst, w)
            pulled = J.T @ g_dst @ np.conj(J)
            worst = max(worst, np.max(np.abs(pulled - g_src)))
    assert worst < 1e-8


def test_transition_round_trip(cp2):
    z = np.array([0.4 - 0.1j, 0.7 + 0.3j])
    w, J = cp2.transition(0, 2, z)
    back, Jb = cp2.transition(2, 0, w)
    assert np.allclose(back, z, atol=1e-14)
    assert np.allclose(Jb @ J, np.eye(2), atol=1e-13)


def test_symbolic_potential_matches_closed_form(cp2):
    sym = symbolic_model("3*log(1 + z1*zb1 + z2*zb2)", 2)
    for p in sample_points(cp2, 5, seed=2):
        z = p.coords
        assert np.max(np.abs(sym.metric(0, z) - cp2.metric(0, z))) < 1e-12
        assert np.max(np.abs(sym.metric_derivative(0, z) - cp2.metric_derivative(0, z))) < 1e-12
        assert np.max(np.abs(sym.ricci_matrix(0, z) - cp2.ricci_matrix(0, z))) < 1e-10


def test_polynomial_potential_exact():
    m = symbolic_model("z1*zb1 + z1**2*zb1**2/4", 1)
    z = np.array([0.7 + 0.2j])
    r2 = abs(z[0]) ** 2
    assert metric_at(m, P(*z)).g[0, 0].real == pytest.approx(1 + r2, rel=1e-12)


def test_domain_errors(cp2):
    with pytest.raises(DomainError):
        metric_at(cp2, P(0.1, chart=0))
    with pytest.raises(DomainError):
        metric_at(cp2, P(0.1, 0.2, chart=5))


def test_non_positive_metric_rejected():
    m = symbolic_model("-z1*zb1", 1)
    with pytest.raises(DegenerateMetricError):
        metric_at(m, P(0.1))


# -- Kähler form (ledgered convention omega = g(., J .)) ---------------------------------


def test_kahler_form_flat(flat1):
    assert kahler_form_eval(flat1, P(0.3), [1, 0], [0, 1]) == pytest.approx(-2.0)


def test_kahler_form_cp1_origin(cp1):
    assert kahler_form_eval(cp1, P(0.0), [1, 0], [0, 1]) == pytest.approx(-4.0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.lists(st.floats(-2, 2), min_size=4, max_size=4))
def test_kahler_form_antisymmetric(X, Y):
    model = projective_model(2)
    p = P(0.2 + 0.1j, -0.4j)
    assert kahler_form_eval(model, p, X, X) == pytest.approx(0.0, abs=1e-12)
    assert kahler_form_eval(model, p, X, Y) == pytest.approx(-kahler_form_eval(model, p, Y, X), abs=1e-12)


def test_kahler_form_dimension_mismatch(cp2):
    with pytest.raises(ValueError):
        kahler_form_eval(cp2, P(0, 0), [1, 0], [0, 1])


# -- Christoffel symbols ----------------------------------------------------------


def test_christoffel_flat_zero(flat2):
    assert np.all(christoffel_at(flat2, P(1.0, 2j)) == 0)


def test_christoffel_cp1(cp1):
    assert christoffel_at(cp1, P(0.0))[0, 0, 0] == pytest.approx(0.0, abs=1e-15)
    assert christoffel_at(cp1, P(1.0))[0, 0, 0] == pytest.approx(-1.0, abs=1e-14)


def test_christoffel_symmetric_and_matches_difference(cp2):
    p = P(0.3 + 0.4j, -0.2 + 0.1j)
    G = christoffel_at(cp2, p)
    assert np.max(np.abs(G - np.swapaxes(G, 1, 2))) < 1e-14
    # d_b g_{c dbar} by complex-direction finite differences: d/dz = (d/dx - i d/dy) / 2
    h = 1e-5
    dg = np.zeros((2, 2, 2), dtype=complex)
    for b in range(2):
        e = np.zeros(2)
        e[b] = h
        dx = (cp2.metric(0, p.coords + e) - cp2.metric(0, p.coords - e)) / (2 * h)
        dy = (cp2.metric(0, p.coords + 1j * e) - cp2.metric(0, p.coords - 1j * e)) / (2 * h)
        dg[b] = (dx - 1j * dy) / 2
    ginv = np.linalg.inv(cp2.metric(0, p.coords))
    G_fd = np.einsum("da,bcd->abc", ginv, dg)
    assert np.max(np.abs(G - G_fd)) < 1e-8


# -- Ricci form and Einstein constant ------------------------------------------------


def test_ricci_flat_zero(flat2):
    assert np.all(ricci_form_at(flat2, P(0.5, 0.5)) == 0)


def test_ricci_equals_omega_cp1_origin(cp1):
    p = P(0.0)
    assert np.allclose(ricci_form_at(cp1, p), form_matrix(metric_at(cp1, p).g), atol=1e-14)


def test_ricci_einstein_cp2(cp2):
    t = einstein_constant(cp2).t
    for p in sample_points(cp2, 10, seed=11):
        diff = ricci_form_at(cp2, p) - t * form_matrix(metric_at(cp2, p).g)
        assert np.max(np.abs(diff)) < 1e-7


def test_ricci_closed():
    # symbolic model with a non-Einstein potential; d Ric by central differences
    m = symbolic_model("z1*zb1 + z2*zb2 + (z1*zb1)**2/5 + z1*zb1*z2*zb2/7", 2, einstein_candidate=False)
    x0 = np.array([0.3, -0.2, 0.1, 0.25])
    h = 1e-4

    def R(x):
        return form_matrix(m.ricci_matrix(0, x[:2] + 1j * x[2:]))

    dR = []
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        dR.append((R(x0 + e) - R(x0 - e)) / (2 * h))
    dR = np.array(dR)  # (k, i, j)
    worst = 0.0
    for i in range(4):
        for j in range(4):
            for k in range(4):
                worst = max(worst, abs(dR[i, j, k] + dR[j, k, i] + dR[k, i, j]))
    assert worst < 1e-7


@pytest.mark.parametrize(
    "name, n, t",
    [("CPn-t1", 1, 1.0), ("CPn-t1", 2, 1.0), ("CPn-t1", 3, 1.0), ("CPn-unit", 1, 2.0), ("CPn-unit", 2, 3.0)],
)
def test_einstein_constant(name, n, t):
    fit = einstein_constant(load_model(name, n))
    assert fit.t == pytest.approx(t, abs=1e-10)
    assert fit.residual < 1e-7
    assert fit.lemma1_applicable


def test_einstein_flat_flagged(flat2):
    fit = einstein_constant(flat2)
    assert fit.t == 0.0
    assert "Lemma 1 inapplicable" in fit.flag
    assert not fit.lemma1_applicable


def test_einstein_rejects_non_einstein():
    m = symbolic_model("z1*zb1 + (z1*zb1)**2/4", 1)
    with pytest.raises(DegenerateMetricError):
        einstein_constant(m)


def test_einstein_needs_32_samples(cp1):
    with pytest.raises(ValueError):
        einstein_constant(cp1, n_samples=8)


# -- canonical bundle connection -------------------------------------------------------


def test_conn_coeff_examples(flat2, cp1):
    assert canonical_conn_coeff(flat2, P(0.3, 0.1j), [1, 2, 3, 4]) == 0
    assert canonical_conn_coeff(cp1, P(0.0), [1, 0]) == pytest.approx(0.0, abs=1e-15)
    assert canonical_conn_coeff(cp1, P(1.0), [1, 0]).real == pytest.approx(1.0, abs=1e-14)


def test_conn_coeff_metric_compatibility(cp2):
    # |frame|^2 = det g_inv up to a constant; u(log |frame|^2) = 2 Re(coefficient)
    rng = np.random.default_rng(5)
    h = 1e-5
    worst = 0.0
    for p in sample_points(cp2, 100, seed=9):
        u = rng.standard_normal(4)
        x = np.concatenate([p.coords.real, p.coords.imag])

        def lognorm(xx):
            return -np.log(np.linalg.det(cp2.metric(p.chart, xx[:2] + 1j * xx[2:])).real)

        lhs = (lognorm(x + h * u) - lognorm(x - h * u)) / (2 * h)
        rhs = 2 * canonical_conn_coeff(cp2, p, u).real
        worst = max(worst, abs(lhs - rhs))
    assert worst < 1e-7


def test_load_model_errors():
    with pytest.raises(ValueError):
        load_model("nope", 2)
    with pytest.raises(ValueError):
        load_model("CPn-t1", 0)
