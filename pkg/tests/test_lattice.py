import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptlattice.lattice import (BlowUpError, LatticeParameters, LatticeWavefunction, correlation,
                               correlation_derivative, current_derivative, evolve, gpe_rhs,
                               link_currents, modified_current, observables, populations_to_state,
                               step, total_norm, zeta_eta)

from conftest import random_state


def test_observables_of_simple_states():
    psi = np.array([1.0, 1j]) / np.sqrt(2)
    assert correlation(psi, 1, 2) == pytest.approx(0.0, abs=1e-15)
    # j~ = -2 Im(psi1 psi2*) = -2 Im(-i/2) = 1
    assert modified_current(psi, 1, 2) == pytest.approx(1.0)
    real = np.array([0.6, 0.8])
    assert correlation(real, 1, 2) == pytest.approx(0.96)
    assert modified_current(real, 1, 2) == 0.0


def test_index_out_of_range():
    with pytest.raises(IndexError):
        correlation(np.ones(3), 0, 1)
    with pytest.raises(IndexError):
        modified_current(np.ones(3), 1, 4)


def test_parameter_validation():
    with pytest.raises(ValueError):
        LatticeParameters(np.zeros(4), np.ones(4))
    with pytest.raises(ValueError):
        LatticeParameters(np.zeros(3), [1.0, np.nan])
    with pytest.raises(ValueError):
        LatticeWavefunction([1.0])
    with pytest.raises(ValueError):
        LatticeWavefunction([1.0, np.inf])
    p = LatticeParameters.uniform(5, tunneling=2.0)
    assert p.hop(1) == 2.0 and p.hop(0) == 0.0 and p.hop(5) == 0.0


def test_wavefunction_is_immutable():
    psi = LatticeWavefunction([1.0, 0.0])
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 2.0


@given(st.integers(min_value=2, max_value=9), st.integers(min_value=0, max_value=10_000))
@settings(max_examples=60, deadline=None)
def test_current_correlation_identity(n, seed):
    a = random_state(np.random.default_rng(seed), n)
    for k in range(1, n + 1):
        for l in range(1, n + 1):
            jt, C = modified_current(a, k, l), correlation(a, k, l)
            assert jt ** 2 + C ** 2 == pytest.approx(4 * abs(a[k - 1]) ** 2 * abs(a[l - 1]) ** 2,
                                                     rel=1e-12, abs=1e-12)
            assert modified_current(a, l, k) == pytest.approx(-jt)


def test_continuity_equation(rng):
    n = 6
    p = LatticeParameters(rng.normal(size=n), rng.uniform(0.5, 1.5, n - 1), rng.uniform(0, 2, n))
    psi = LatticeWavefunction(random_state(rng, n))
    dn = 2 * np.real(np.conj(psi.amplitudes) * gpe_rhs(psi, p))
    j = link_currents(psi, p)
    inflow = np.r_[0.0, j] - np.r_[j, 0.0]
    np.testing.assert_allclose(dn, inflow, atol=1e-12)


def test_zeta_eta_against_finite_difference(rng):
    n = 7
    p = LatticeParameters(rng.normal(size=n), rng.uniform(0.5, 1.5, n - 1), rng.uniform(0, 1, n))
    psi = LatticeWavefunction(random_state(rng, n, 0.5))
    h = 1e-4
    for k, l in [(1, 2), (2, 4), (3, 5), (6, 7), (1, 7)]:
        f = step(psi, p, h)
        b = _backward(psi, p, h)
        num_j = (modified_current(f, k, l) - modified_current(b, k, l)) / (2 * h)
        num_C = (correlation(f, k, l) - correlation(b, k, l)) / (2 * h)
        assert current_derivative(psi, p, k, l) == pytest.approx(num_j, rel=1e-7, abs=1e-7)
        assert correlation_derivative(psi, p, k, l) == pytest.approx(num_C, rel=1e-7, abs=1e-7)


def _backward(psi, p, h):
    # psi(t - h) = conj(U(h) conj(psi)) for a real Hamiltonian
    fwd = step(LatticeWavefunction(np.conj(psi.amplitudes)), p, h)
    return LatticeWavefunction(np.conj(fwd.amplitudes))


def test_zeta_open_chain_ends():
    p = LatticeParameters.uniform(3)
    psi = np.array([1.0, 2.0, 3.0])
    zeta, eta = zeta_eta(psi, p, 1, 3)
    # zeta_13 = J12 C23 - J23 C12 (links outside the chain vanish)
    assert zeta == pytest.approx(2 * 6 - 2 * 2)
    assert eta == 0.0


def test_norm_conservation_hermitian(rng):
    n = 8
    p = LatticeParameters(rng.normal(size=n), np.ones(n - 1), np.full(n, 2.0))
    psi = LatticeWavefunction(random_state(rng, n))
    out = evolve(psi, p, 10.0, dt=1e-3)
    assert abs(total_norm(out[-1]) - total_norm(psi)) < 1e-10


def test_rk4_fourth_order():
    p = LatticeParameters([0.3, -0.2, 0.5, 0.0], [1.0, 0.7, 1.2], [1.0, 1.0, 1.0, 1.0])
    psi = LatticeWavefunction([1.0, 0.5j, 0.2, -0.3])
    ref = evolve(psi, p, 2.0, dt=1e-4)[-1].amplitudes
    e1 = np.max(np.abs(evolve(psi, p, 2.0, dt=0.04)[-1].amplitudes - ref))
    e2 = np.max(np.abs(evolve(psi, p, 2.0, dt=0.02)[-1].amplitudes - ref))
    assert 12 < e1 / e2 < 20


def test_two_site_rabi_oscillation():
    p = LatticeParameters.uniform(2, tunneling=1.0)
    psi = LatticeWavefunction([1.0, 0.0])
    out = evolve(psi, p, 3.0, dt=1e-3, sample_every=0.5)
    for s in out:
        assert s.populations[0] == pytest.approx(np.cos(s.time) ** 2, abs=1e-10)


def test_step_provider_sees_every_stage():
    seen = []
    p = LatticeParameters.uniform(3)

    def provider(t, y):
        seen.append(t)
        return p

    step(LatticeWavefunction([1, 0, 0], 1.0), provider, 0.1)
    assert seen == pytest.approx([1.0, 1.05, 1.05, 1.1])


def test_step_blow_up():
    p = LatticeParameters([1e308, 0.0], [1.0])
    with pytest.raises(BlowUpError):
        step(LatticeWavefunction([1e10, 1.0]), p, 1.0)


def test_populations_to_state_and_observables():
    psi = populations_to_state([4.0, 1.0], [0.0, np.pi / 2])
    obs = observables(psi, LatticeParameters.uniform(2), [(1, 2)])
    np.testing.assert_allclose(obs.n, [4.0, 1.0])
    assert obs.jt[(1, 2)] == pytest.approx(4.0)
    assert obs.j[0] == pytest.approx(4.0)
    with pytest.raises(ValueError):
        populations_to_state([-1.0, 1.0])
