"""Long reproductions of the steady-state and full-model behaviour (pytest -m slow)."""

import math

import numpy as np
import pytest

from analysis import closed_trajectory, extract_features, feature_scan, sweep
from config import parse_config
from dynamics import (
    default_step,
    evolve_open,
    initial_density,
    rabi_frequency,
    run_open,
    solve_steady,
    truncation_converged,
    validate_density_matrix,
)
from hilbert import build_space
from main import run_command
from measures import expectation, qubit_concurrence, trace_distance
from model import EffectiveParams, ModelParams, liouvillian
from numerics import line_fit

pytestmark = pytest.mark.slow


def test_effective_model_tracks_full_model():
    p = ModelParams(omega=10.0, epsilon=50.0, g1=1.0, g2=0.8)
    omega = rabi_frequency(EffectiveParams.from_params(p, 1), p.g1, p.g2)
    times = np.linspace(0.0, math.pi / omega, 400)
    effective, _, _ = closed_trajectory(p, 1, times, model="effective")
    full, _, _ = closed_trajectory(p, 1, times, model="full", n_cavity=5)
    assert np.max(np.abs(effective.entanglement - full.entanglement)) <= 0.05


def test_open_undriven_decays_to_ground():
    cfg = parse_config("d = 0\nnc = 4\nn_steps = 200\n")
    doc = run_command("open", cfg)
    last = doc.frame.iloc[-1]
    assert last["sz1"] == pytest.approx(-0.5, abs=1e-3)
    assert last["sz2"] == pytest.approx(-0.5, abs=1e-3)
    assert last["E"] == pytest.approx(0.0, abs=1e-4)


def test_driven_steady_state_is_entangled():
    p = ModelParams(d=0.01)
    rho, space, ops = solve_steady(p, 6)
    assert qubit_concurrence(rho, space) >= 1e-3
    assert expectation(rho, ops.s1_z) > -0.5
    assert expectation(rho, ops.s2_z) > -0.5
    assert truncation_converged(p, 6)


@pytest.mark.parametrize("d, ratio", [(0.005, 1.0), (0.01, 0.8), (0.02, 0.6)])
def test_steady_state_matches_long_time_evolution(d, ratio):
    p = ModelParams(d=d).with_value("ratio", ratio)
    space, ops = build_space(4)
    rho_ss, _, _ = solve_steady(p, 4)
    traj = evolve_open(liouvillian(p, ops), initial_density(space, 1), [0.0, 8000.0], default_step(p, ops))
    validate_density_matrix(traj.states[-1], trace_tol=1e-8)
    assert trace_distance(traj.states[-1], rho_ss) <= 1e-4


def test_open_run_respects_physical_bounds():
    p = ModelParams(d=0.02)
    space, ops = build_space(4)
    traj = run_open(p, ops, initial_density(space, 1), np.linspace(0.0, 200.0, 41))
    for rho in traj.states:
        assert abs(np.trace(rho) - 1) <= 1e-8
        assert np.abs(rho - rho.conj().T).max() <= 1e-9
        assert np.linalg.eigvalsh(rho).min() >= -1e-8


def test_drive_sweep_has_interior_optimum():
    table = sweep("d", np.linspace(0.002, 0.1, 50), ModelParams(), ("E_ss",), n_cavity=6)
    e_ss = table.column("E_ss")
    peak = int(np.argmax(e_ss))
    assert 0 < peak < len(e_ss) - 1
    assert e_ss[0] < 0.5 * e_ss[peak]
    assert e_ss[-1] < 0.5 * e_ss[peak]


def test_ratio_sweep_valley_then_hump():
    ratios = np.linspace(0.05, 1.0, 96)
    table = sweep("ratio", ratios, ModelParams(d=0.016), ("E_ss",), n_cavity=6)
    features = extract_features(table, zero_tol=1e-4, d=0.016)
    assert features.g2r > 0
    e_ss = table.column("E_ss")
    below = ratios < features.valley[0]
    assert below.any() and e_ss[below].max() > 1e-4

    shallow = sweep("ratio", ratios, ModelParams(d=0.006), ("E_ss",), n_cavity=6)
    assert extract_features(shallow, zero_tol=1e-4, d=0.006).g2r == 0.0


def test_cross_correlation_peaks_inside_entanglement_dip():
    ratios = np.linspace(0.05, 1.0, 96)
    table = sweep("ratio", ratios, ModelParams(d=0.01), ("E_ss", "C_ss"), n_cavity=6)
    e_ss = table.column("E_ss")
    c_ss = table.column("C_ss")
    i_min = int(np.argmin(e_ss))
    assert 0 < i_min < ratios.size - 1

    # дъното е областта под средата между минимума и гърбицата вляво от него
    level = 0.5 * (e_ss[i_min] + e_ss[:i_min].max())
    lo = hi = i_min
    while lo > 0 and e_ss[lo - 1] <= level:
        lo -= 1
    while hi < ratios.size - 1 and e_ss[hi + 1] <= level:
        hi += 1
    i_peak = int(np.nanargmax(c_ss))
    assert lo - 1 <= i_peak <= hi + 1


def test_feature_trends_over_drive():
    drives = np.array([0.004, 0.006, 0.016, 0.02, 0.03, 0.04])
    features, _ = feature_scan(drives, np.linspace(0.05, 1.0, 96), ModelParams(), n_cavity=6, zero_tol=1e-4)
    g2r = np.array([f.g2r for f in features])
    assert np.all(np.diff(g2r) >= -1e-9)

    with_valley = g2r > 0
    assert with_valley.sum() >= 2
    slope, _, _ = line_fit(drives[with_valley], g2r[with_valley])
    assert slope > 0

    assert features[0].entangled
    assert 0.3 <= features[0].g2p <= 0.7
    # при силен драйв E_ss = 0 за всяко g2/g1 и g2p не е дефиниран
    assert not features[-1].entangled
    assert math.isnan(features[-1].g2p)
