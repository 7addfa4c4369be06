import csv
import io
from itertools import combinations, permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kahlerlag.errors import DomainError
from kahlerlag.optimize import (
    FLOOR,
    OrbitWeights,
    defect_objective,
    extremize_volume,
    minimize_defect,
    minimize_volume,
    orbit_volume,
    project_simplex,
    tangent_gradient,
)

CLIFFORD = np.full(3, 1 / 3)


def test_orbit_weights_validation():
    OrbitWeights((0.5, 0.25, 0.25))
    with pytest.raises(DomainError):
        OrbitWeights((0.5, 0.6, -0.1))
    with pytest.raises(DomainError):
        OrbitWeights((0.9995, 0.0005))
    with pytest.raises(DomainError):
        OrbitWeights((0.5, 0.4))


def test_orbit_volume_rejects_floor(cp2):
    with pytest.raises(DomainError):
        orbit_volume(cp2, (0.9995, 0.0004, 0.0001))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=5))
def test_projection_lands_on_floored_simplex(x):
    y = project_simplex(x)
    assert abs(y.sum() - 1) < 1e-12
    assert y.min() >= FLOOR - 1e-15
    # idempotent
    assert np.allclose(project_simplex(y), y, atol=1e-14)


def test_stationary_points(cp1, cp2):
    g1 = tangent_gradient(lambda a: orbit_volume(cp1, a), np.array([0.5, 0.5]))
    g2 = tangent_gradient(lambda a: orbit_volume(cp2, a), CLIFFORD)
    assert np.linalg.norm(g1) < 1e-6
    assert np.linalg.norm(g2) < 1e-6


def test_volume_is_maximal_at_clifford(cp2):
    assert orbit_volume(cp2, (0.5, 0.25, 0.25)) < orbit_volume(cp2, CLIFFORD)


def test_objectives_permutation_invariant(cp2):
    a = (0.5, 0.3, 0.2)
    vols = [orbit_volume(cp2, p) for p in permutations(a)]
    defs = [defect_objective(cp2, p) for p in permutations(a)]
    assert np.ptp(vols) < 1e-12
    assert np.ptp(defs) < 1e-9 * max(defs)


def test_defect_objective_values(cp2):
    assert defect_objective(cp2, CLIFFORD) < 1e-12
    a = np.array([0.5, 0.25, 0.25])
    vol = orbit_volume(cp2, a)
    pairs = sum(((a[j] - a[k]) * vol) ** 2 for j, k in combinations(range(3), 2))
    # each generator integral is (n + 1) (a_j - a_k) Vol
    assert defect_objective(cp2, a) == pytest.approx(9 * pairs, rel=1e-10)


def test_clifford_start_is_stationary(cp2):
    tr = minimize_volume(cp2, CLIFFORD, certify=False)
    assert len(tr.iterates) <= 2
    assert np.allclose(tr.final, CLIFFORD, atol=1e-12)
    assert tr.converged


def test_volume_descent_reaches_floor(cp2):
    tr = minimize_volume(cp2, (0.6, 0.2, 0.2))
    assert tr.termination == "hit simplex floor"
    assert min(tr.final) == pytest.approx(FLOOR)
    vols = [it.volume for it in tr.iterates]
    assert all(b < a for a, b in zip(vols, vols[1:]))
    assert not tr.final_certificate.passed


def test_volume_ascent_cp1(cp1):
    tr = extremize_volume(cp1, (0.9, 0.1), certify=False)
    assert tr.converged
    assert np.max(np.abs(tr.final - 0.5)) < 1e-4


def test_defect_descent_matches_volume_critical_point(cp2):
    d = minimize_defect(cp2, (0.5, 0.3, 0.2))
    v = extremize_volume(cp2, (0.5, 0.3, 0.2), certify=False)
    assert d.converged and v.converged
    assert np.max(np.abs(d.final - CLIFFORD)) < 1e-3
    assert np.max(np.abs(d.final - v.final)) < 1e-3
    assert d.final_certificate.max_modulus < 1e-6
    objs = [it.objective for it in d.iterates]
    assert all(b < a for a, b in zip(objs, objs[1:]))


def test_trace_csv(cp1):
    tr = extremize_volume(cp1, (0.7, 0.3), certify=False)
    rows = list(csv.reader(io.StringIO(tr.to_csv())))
    assert rows[0] == ["iterate", "a1", "a2", "objective", "volume", "grad_norm", "certificate"]
    assert len(rows) == len(tr.iterates) + 1
