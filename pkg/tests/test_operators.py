import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from su2depol.operators import (CoherentPoint, canonical_rotation, coherent_state, commutator_residual,
                                rotate_coherent, rotation_of, stokes_operators, stokes_square_trace,
                                su2_unitaries, su2_unitary)

from _strategies import points, rotation_vectors

PAULI = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]])]


def test_one_photon_operators_are_pauli():
    _, sx, sy, sz = stokes_operators(1)
    for op, ref in zip((sx, sy, sz), PAULI):
        np.testing.assert_array_equal(op, ref)


def test_vacuum_operators_vanish():
    for op in stokes_operators(0):
        assert op.shape == (1, 1) and op[0, 0] == 0


@pytest.mark.parametrize("n", range(0, 11))
def test_casimir_and_commutators(n):
    s0, sx, sy, sz = stokes_operators(n)
    np.testing.assert_allclose(sx @ sx + sy @ sy + sz @ sz, n * (n + 2) * np.eye(n + 1), atol=1e-12)
    np.testing.assert_allclose(s0, n * np.eye(n + 1))
    assert commutator_residual(n) < 1e-12
    for op in (sx, sy, sz):
        assert np.max(np.abs(op - op.conj().T)) < 1e-14


def test_commutator_residual_examples():
    assert commutator_residual(0) == 0.0
    assert commutator_residual(1) < 1e-13
    assert commutator_residual(5) < 1e-12


def test_sz_diagonal_follows_mode_one_count():
    n = 4
    np.testing.assert_array_equal(np.diag(stokes_operators(n)[3]).real, [4, 2, 0, -2, -4])


def test_operators_are_read_only():
    with pytest.raises(ValueError):
        stokes_operators(2)[1][0, 0] = 1.0


@pytest.mark.parametrize("bad", [-1, 1.5])
def test_rejects_bad_photon_number(bad):
    with pytest.raises(ValueError):
        stokes_operators(bad)


@pytest.mark.parametrize("n", range(0, 7))
def test_square_trace(n):
    sz = stokes_operators(n)[3]
    assert np.trace(sz @ sz).real == pytest.approx(stokes_square_trace(n))
    if n == 2:
        assert stokes_square_trace(2) == 8


def test_zero_rotation_is_identity():
    np.testing.assert_allclose(su2_unitary(np.zeros(3), 3), np.eye(4), atol=1e-15)
    np.testing.assert_allclose(rotation_of(np.zeros(3), 2), np.eye(3), atol=1e-15)


@given(rotation_vectors(max_norm=3 * np.pi))
def test_unitarity(u):
    uop = su2_unitary(u, 2)
    assert np.max(np.abs(uop.conj().T @ uop - np.eye(3))) < 1e-12


def test_half_turn_is_pauli_up_to_phase():
    axis = np.array([1.0, 2.0, -0.5])
    axis /= np.linalg.norm(axis)
    uop = su2_unitary(np.pi / 2 * axis, 1)  # exp(i (pi/2) a.sigma) = i a.sigma
    np.testing.assert_allclose(uop, 1j * np.einsum("k,kij->ij", axis, PAULI), atol=1e-13)
    # modulus pi on the n=1 sector: a full double cover turn, U = -1
    np.testing.assert_allclose(su2_unitary(np.pi * axis, 1), -np.eye(2), atol=1e-13)
    r = rotation_of(np.pi / 2 * axis, 1)
    np.testing.assert_allclose(r, 2 * np.outer(axis, axis) - np.eye(3), atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(rotation_vectors(), st.integers(1, 6))
def test_rotation_is_special_orthogonal_and_fixes_axis(u, n):
    r = rotation_of(u, n)
    np.testing.assert_allclose(r.T @ r, np.eye(3), atol=1e-10)
    assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(r @ u, u, atol=1e-10)
    np.testing.assert_allclose(r, rotation_of(u, 1), atol=1e-10)


def test_rotation_of_rejects_vacuum():
    with pytest.raises(ValueError):
        rotation_of(np.array([0.1, 0, 0]), 0)


@settings(max_examples=30, deadline=None)
@given(rotation_vectors(), st.integers(1, 6))
def test_group_property_doubling(u, n):
    uu = su2_unitary(u, n) @ su2_unitary(u, n)
    doubled = su2_unitary(canonical_rotation(2 * u), n)
    # equal up to a global phase
    phase = np.vdot(doubled.ravel(), uu.ravel())
    phase /= abs(phase)
    assert np.max(np.abs(uu - phase * doubled)) < 1e-10


def test_canonical_rotation_range():
    u = np.array([0.0, 0.0, 2.5 * np.pi])
    np.testing.assert_allclose(canonical_rotation(u), [0, 0, 0.5 * np.pi])
    assert np.linalg.norm(canonical_rotation(np.array([0, 2 * np.pi, 0]))) == pytest.approx(np.pi)


def test_batched_unitaries_match_single():
    us = np.random.default_rng(3).normal(size=(5, 3))
    batch = su2_unitaries(us, 3)
    for u, b in zip(us, batch):
        np.testing.assert_allclose(b, su2_unitary(u, 3), atol=1e-14)


def test_coherent_state_examples():
    np.testing.assert_allclose(coherent_state(2, CoherentPoint(0.0)), [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(coherent_state(2, CoherentPoint(np.pi / 2, 0.0)),
                               [0.5, np.sqrt(0.5), 0.5], atol=1e-15)


@settings(max_examples=50)
@given(st.integers(0, 8), points())
def test_coherent_state_is_top_eigenvector(n, tp):
    p = CoherentPoint(*tp)
    assert np.linalg.norm(p.omega) == pytest.approx(1.0, abs=1e-14)
    v = coherent_state(n, p)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-14)
    _, sx, sy, sz = stokes_operators(n)
    gen = p.omega[0] * sx + p.omega[1] * sy + p.omega[2] * sz
    assert np.max(np.abs(gen @ v - n * v)) < 1e-12


@settings(max_examples=50)
@given(st.integers(1, 8), points(), points())
def test_coherent_overlap_rule(n, a, b):
    pa, pb = CoherentPoint(*a), CoherentPoint(*b)
    cos_angle = np.clip(pa.omega @ pb.omega, -1, 1)
    expected = ((1 + cos_angle) / 2) ** n  # cos^{2n}(angle/2)
    got = abs(np.vdot(coherent_state(n, pa), coherent_state(n, pb))) ** 2
    assert got == pytest.approx(expected, abs=1e-10)


def test_point_from_vector_roundtrip():
    p = CoherentPoint(1.1, 5.0)
    q = CoherentPoint.from_vector(3 * p.omega)
    assert (q.theta, q.phi) == pytest.approx((p.theta, p.phi))
    with pytest.raises(ValueError):
        CoherentPoint.from_vector([0, 0, 0])


def test_rotate_coherent_examples():
    p = CoherentPoint(0.7, 1.3)
    q = rotate_coherent(np.zeros(3), 2, p)
    np.testing.assert_allclose(q.omega, p.omega, atol=1e-12)
    pole = rotate_coherent(np.array([0, 0, 0.9]), 2, CoherentPoint(0.0))
    assert pole.theta == pytest.approx(0.0, abs=1e-7)


@settings(max_examples=30, deadline=None)
@given(rotation_vectors(), points(), st.integers(1, 5))
def test_rotated_coherent_state_overlap(u, tp, n):
    p = CoherentPoint(*tp)
    q = rotate_coherent(u, n, p)
    moved = su2_unitary(u, n).conj().T @ coherent_state(n, p)
    assert abs(np.vdot(coherent_state(n, q), moved)) == pytest.approx(1.0, abs=1e-10)
