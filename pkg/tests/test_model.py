import logging

import numpy as np
import pytest

from model import EffectiveParams, ModelParams, effective_terms, h_effective, h_model, h_rotating, liouvillian
from numerics import is_hermitian, random_density_matrix, unvec, vec


def test_default_params(default_params):
    p = default_params
    assert (p.omega, p.epsilon, p.omega_d, p.kappa, p.gamma) == (50.0, 10.0, 9.99, 1.0, 0.005)
    assert p.delta == -40.0
    assert p.with_value("ratio", 0.6).g2 == pytest.approx(0.6)
    assert p.with_value("d", 0.01).d == 0.01


@pytest.mark.parametrize("name", ["g2", "kappa", "gamma", "d"])
def test_negative_rates_rejected(name):
    with pytest.raises(ValueError):
        ModelParams(**{name: -1.0})


def test_effective_params():
    eff = EffectiveParams(nph=1, delta=40.0)
    assert eff.c == 3
    assert eff.delta_tilde == 120.0
    assert eff.g_tilde(2.0) == pytest.approx(2.0 * np.sqrt(3))
    with pytest.raises(ValueError):
        EffectiveParams(nph=0, delta=0.0)
    with pytest.raises(ValueError):
        EffectiveParams(nph=-1, delta=1.0)


def test_dispersive_guard_warns(caplog):
    with caplog.at_level(logging.WARNING, logger="model"):
        assert not EffectiveParams(nph=1, delta=5.0).check_dispersive(1.0, 1.0)
    assert "дисперсионния" in caplog.text
    assert EffectiveParams(nph=1, delta=40.0).check_dispersive(1.0, 1.0)


def test_effective_terms():
    eff = EffectiveParams(nph=1, delta=40.0)
    splitting, exchange = effective_terms(eff, 1.0, 1.0)
    assert splitting == 0.0
    assert exchange == pytest.approx(1.0 / 40.0)
    splitting, exchange = effective_terms(eff, 1.0, 0.6)
    assert splitting == pytest.approx(3 * (1 - 0.36) / 80.0)
    assert exchange == pytest.approx(0.6 / 40.0)


def test_h_effective_is_traceless_with_rabi_spectrum():
    eff = EffectiveParams(nph=2, delta=-40.0)
    h = h_effective(eff, 1.0, 0.7)
    splitting, exchange = effective_terms(eff, 1.0, 0.7)
    assert abs(np.trace(h)) < 1e-15
    np.testing.assert_allclose(np.linalg.eigvalsh(h), [-np.hypot(splitting, exchange), np.hypot(splitting, exchange)])


def test_h_model_hermitian_and_conserves_excitations(space4, default_params):
    _, ops = space4
    h = h_model(default_params.with_value("ratio", 0.8), ops)
    assert is_hermitian(h)
    excitations = ops.n_phot + ops.s1_z + ops.s2_z
    np.testing.assert_allclose(h @ excitations - excitations @ h, 0, atol=1e-12)


def test_h_rotating_drive_breaks_conservation(space4, default_params):
    _, ops = space4
    h = h_rotating(default_params.with_value("d", 0.1), ops)
    assert is_hermitian(h)
    excitations = ops.n_phot + ops.s1_z + ops.s2_z
    assert np.abs(h @ excitations - excitations @ h).max() > 0.05


def test_h_rotating_drive_acts_on_second_qubit_only(space4, default_params):
    _, ops = space4
    drive = h_rotating(default_params.with_value("d", 0.1), ops) - h_rotating(default_params, ops)
    np.testing.assert_allclose(drive, 0.1 * (ops.s2_plus + ops.s2_minus), atol=1e-12)
    # драйвът не свързва кубит 1 и фотонния брой
    np.testing.assert_allclose(drive @ ops.s1_z - ops.s1_z @ drive, 0, atol=1e-12)
    np.testing.assert_allclose(drive @ ops.n_phot - ops.n_phot @ drive, 0, atol=1e-12)


def test_liouvillian_is_trace_preserving(space4, default_params, rng):
    space, ops = space4
    lv = liouvillian(default_params.with_value("d", 0.02), ops)
    identity = vec(np.eye(space.dim))
    np.testing.assert_allclose(identity @ lv, 0, atol=1e-12)

    rho = random_density_matrix(space.dim, rng)
    drho = unvec(lv @ vec(rho), space.dim)
    assert abs(np.trace(drho)) < 1e-12
    assert is_hermitian(drho, tol=1e-12)


def test_liouvillian_without_dissipation_is_commutator(space4, default_params, rng):
    space, ops = space4
    p = ModelParams(kappa=0.0, gamma=0.0, d=0.03)
    rho = random_density_matrix(space.dim, rng)
    h = h_rotating(p, ops)
    np.testing.assert_allclose(
        unvec(liouvillian(p, ops) @ vec(rho), space.dim), -1j * (h @ rho - rho @ h), atol=1e-12
    )


def test_cavity_decay_of_single_photon(space4):
    space, ops = space4
    p = ModelParams(g1=1.0, g2=0.0, gamma=0.0, kappa=2.0)
    rho = np.zeros((space.dim, space.dim), dtype=complex)
    rho[space.index(0, 1, 0), space.index(0, 1, 0)] = 1.0
    drho = unvec(liouvillian(p, ops) @ vec(rho), space.dim)
    # d<n>/dt от дисипацията е -κ<n>
    assert np.trace(ops.n_phot @ drho).real == pytest.approx(-2.0)
