import numpy as np
import pytest

from hilbert import basis_state, build_space, cavity_annihilation


def test_dimension_and_index(space6):
    space, _ = space6
    assert space.dim == 24
    assert space.index(0, 0, 0) == 0
    assert space.index(0, 0, 1) == 1
    assert space.index(0, 1, 0) == 2
    assert space.index(1, 0, 0) == 12
    assert space.index(1, 5, 1) == 23


def test_build_space_rejects_small_truncation():
    with pytest.raises(ValueError):
        build_space(1)


def test_cavity_ladder():
    a = cavity_annihilation(4)
    np.testing.assert_allclose(np.diag(a.conj().T @ a).real, [0, 1, 2, 3])
    comm = a @ a.conj().T - a.conj().T @ a
    # [a, a†] = I except on the last Fock level
    np.testing.assert_allclose(np.diag(comm).real, [1, 1, 1, -3])


def test_operator_actions(space4):
    space, ops = space4
    psi = basis_state(space, 0, 2, 1)
    np.testing.assert_allclose(ops.a @ psi, np.sqrt(2) * basis_state(space, 0, 1, 1))
    np.testing.assert_allclose(ops.s2_minus @ psi, basis_state(space, 0, 2, 0))
    np.testing.assert_allclose(ops.s1_plus @ psi, basis_state(space, 1, 2, 1))
    assert np.allclose(ops.s1_minus @ psi, 0)
    assert (psi.conj() @ ops.s1_z @ psi).real == pytest.approx(-0.5)
    assert (psi.conj() @ ops.s2_z @ psi).real == pytest.approx(0.5)
    assert (psi.conj() @ ops.n_phot @ psi).real == pytest.approx(2.0)


def test_spin_algebra(space4):
    _, ops = space4
    for i in (1, 2):
        np.testing.assert_allclose(ops.s_plus(i) @ ops.s_minus(i), ops.s_z(i) + 0.5 * ops.identity, atol=1e-15)
        np.testing.assert_allclose(ops.s_plus(i), ops.s_minus(i).conj().T)


def test_operators_are_read_only(space4):
    _, ops = space4
    with pytest.raises(ValueError):
        ops.a[0, 0] = 1.0


def test_basis_state_validation(space4):
    space, _ = space4
    with pytest.raises(ValueError):
        basis_state(space, 0, 4, 0)
    with pytest.raises(ValueError):
        basis_state(space, 2, 0, 0)
