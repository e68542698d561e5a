import math

import numpy as np
import pytest

from ptlattice.lattice import LatticeParameters, evolve
from ptlattice.semiclassical import (PacketState, bloch_period, dispersion, effective_mass,
                                     evolve_packet, gaussian_packet, group_velocity,
                                     momentum_grid, momentum_transform, packet_center,
                                     packet_trajectory, parseval_constant,
                                     semiclassical_profile, wrap)


def test_band_examples():
    assert dispersion(0.0) == -2.0
    assert dispersion(math.pi) == pytest.approx(2.0)
    q = np.linspace(-math.pi, math.pi, 1001)
    assert np.ptp(dispersion(q, 1.5)) == pytest.approx(6.0)
    assert group_velocity(math.pi / 2) == pytest.approx(2.0)
    assert effective_mass(0.0) == pytest.approx(0.5)
    assert effective_mass(math.pi) == pytest.approx(-0.5)
    assert effective_mass(math.pi / 2) == math.inf
    assert effective_mass(-math.pi / 2) == math.inf
    with pytest.raises(ValueError):
        effective_mass(0.0, J=0.0)


def test_group_velocity_is_band_slope():
    q = np.linspace(-3, 3, 13)
    h = 1e-6
    fd = (dispersion(q + h) - dispersion(q - h)) / (2 * h)
    np.testing.assert_allclose(group_velocity(q), fd, atol=1e-8)


def test_wrap():
    assert wrap(math.pi) == pytest.approx(-math.pi)
    assert wrap(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    assert PacketState(q0=2 * math.pi + 0.1).q0 == pytest.approx(0.1)


def test_constant_force_linear_momentum():
    p = PacketState(q0=0.0, n0=10.0, dq=0.05)
    t, states = packet_trajectory(p, -0.01, 50.0, dt=0.05)
    q = np.array([s.q0 for s in states])
    np.testing.assert_allclose(q, -0.01 * t, atol=1e-12)


def test_bloch_oscillation_is_periodic():
    F = 0.2
    T = bloch_period(F)
    p = PacketState(q0=0.3, n0=50.0, dq=0.05)
    _, states = packet_trajectory(p, F, T, dt=T / 4000)
    end = states[-1]
    assert end.q0 == pytest.approx(p.q0, abs=1e-9)
    assert end.n0 == pytest.approx(p.n0, abs=1e-8)
    # amplitude of the real-space oscillation is bandwidth / |F|
    n = np.array([s.n0 for s in states])
    assert np.ptp(n) == pytest.approx(4.0 / F, rel=1e-4)


def test_time_dependent_force():
    p = PacketState(q0=0.0)
    out = evolve_packet(p, lambda t: 2 * t, 0.5)
    assert out.q0 == pytest.approx(0.25)
    assert out.time == 0.5
    with pytest.raises(ValueError):
        evolve_packet(p, 1.0, 0.0)


def test_uniform_motion_without_force():
    p = PacketState(q0=0.4, n0=0.0)
    _, states = packet_trajectory(p, 0.0, 10.0, dt=0.1)
    assert states[-1].n0 == pytest.approx(10.0 * group_velocity(0.4), rel=1e-12)
    assert states[-1].q0 == 0.4


def test_gaussian_packet_norm_and_symmetry():
    psi = gaussian_packet(300, 150.5, 0.0, 0.017)
    assert np.sum(psi.populations) == pytest.approx(1.0, abs=1e-6)
    assert psi.populations[149] == psi.populations[150]
    assert packet_center(psi) == pytest.approx(150.5, abs=1e-9)
    with pytest.raises(ValueError):
        gaussian_packet(10, 5, 0, 0.0)


def test_profile_at_start_is_initial_packet():
    p = PacketState(q0=0.2, n0=40.0, dq=0.1)
    np.testing.assert_array_equal(semiclassical_profile(p, 80).amplitudes,
                                  gaussian_packet(80, 40.0, 0.2, 0.1).amplitudes)


def test_profile_warns_near_zone_edge():
    with pytest.warns(RuntimeWarning):
        semiclassical_profile(PacketState(q0=3.0, n0=10.0, dq=0.05), 20)


def test_free_spreading_matches_lattice():
    N, dq, q0, t_end = 300, 0.1, 0.3, 20.0
    psi = gaussian_packet(N, 100.0, q0, dq)
    out = evolve(psi, LatticeParameters.uniform(N), t_end, dt=1e-2)[-1]
    _, states = packet_trajectory(PacketState(q0, 100.0, dq), 0.0, t_end, dt=1e-2)
    sc = semiclassical_profile(states[-1], N)

    def var(w):
        n = w.populations / np.sum(w.populations)
        k = np.arange(1, N + 1)
        return np.sum(n * k ** 2) - np.sum(n * k) ** 2

    # the parabolic band makes the centre drift ~exp(-dq^2/2) too fast
    assert packet_center(sc) - 100 == pytest.approx(packet_center(out) - 100, rel=0.01)
    assert var(sc) == pytest.approx(var(out), rel=0.01)
    assert var(out) > 1.5 * var(psi)


def test_plane_wave_single_bin():
    L = 64
    q = momentum_grid(L)
    k = np.arange(1, L + 1)
    spec = momentum_transform(np.exp(1j * q[40] * k))
    assert spec.peak == pytest.approx(q[40])
    assert np.count_nonzero(spec.power > 1e-20) == 1
    assert abs(spec.amplitudes[40]) == pytest.approx(L / (2 * math.pi))


def test_momentum_grid_parity():
    assert momentum_grid(4) == pytest.approx(2 * math.pi * np.array([-2, -1, 0, 1]) / 4)
    assert momentum_grid(5) == pytest.approx(2 * math.pi * np.array([-2, -1, 0, 1, 2]) / 5)


def test_transform_matches_direct_sum(rng):
    a = rng.normal(size=9) + 1j * rng.normal(size=9)
    spec = momentum_transform(a)
    k = np.arange(1, 10)
    direct = np.array([np.sum(np.exp(-1j * q * k) * a) for q in spec.q]) / (2 * math.pi)
    np.testing.assert_allclose(spec.amplitudes, direct, atol=1e-13)
    assert spec.spacing == pytest.approx(2 * math.pi / 9)


@pytest.mark.parametrize("L", [7, 64, 300])
def test_parseval(rng, L):
    a = rng.normal(size=L) + 1j * rng.normal(size=L)
    lhs = np.sum(momentum_transform(a).power)
    assert lhs == pytest.approx(parseval_constant(L) * np.sum(np.abs(a) ** 2), rel=1e-12)
