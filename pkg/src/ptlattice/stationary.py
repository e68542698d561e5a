"""Ground states of the Hermitian nonlinear lattice at fixed total norm."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .lattice import LatticeParameters, LatticeWavefunction, _amps


class GroundStateNotConverged(RuntimeError):
    pass


@dataclass(frozen=True)
class GroundStateRequest:
    params: LatticeParameters
    total_norm: float = 1.0
    tolerance: float = 1e-12
    max_iterations: int = 1_000_000
    dtau: float = 1e-2

    def __post_init__(self):
        if not self.total_norm > 0:
            raise ValueError("total_norm must be positive")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


@njit(cache=True)
def apply_h_nb(psi, E, J, g, out):
    n = psi.shape[0]
    for k in range(n):
        h = (E[k] + g[k] * (psi[k].real ** 2 + psi[k].imag ** 2)) * psi[k]
        if k > 0:
            h -= J[k - 1] * psi[k - 1]
        if k < n - 1:
            h -= J[k] * psi[k + 1]
        out[k] = h


@njit(cache=True)
def _mu_res(psi, E, J, g, hpsi):
    apply_h_nb(psi, E, J, g, hpsi)
    nn = 0.0
    for k in range(psi.shape[0]):
        nn += psi[k].real ** 2 + psi[k].imag ** 2
    mu = (np.vdot(psi, hpsi)).real / nn
    res = 0.0
    for k in range(psi.shape[0]):
        z = hpsi[k] - mu * psi[k]
        res += z.real ** 2 + z.imag ** 2
    return mu, np.sqrt(res / nn)


@njit(cache=True)
def _flow(psi, E, J, g, hpsi, out):
    mu, _ = _mu_res(psi, E, J, g, hpsi)
    for k in range(psi.shape[0]):
        out[k] = -(hpsi[k] - mu * psi[k])


@njit(cache=True)
def imaginary_time_nb(psi, E, J, g, norm, dtau, tol, max_iter, history):
    """Projected imaginary-time RK4 with renormalisation to ``norm``."""
    n = psi.shape[0]
    y = psi * np.sqrt(norm / np.sum(np.abs(psi) ** 2))
    hpsi = np.empty(n, dtype=np.complex128)
    k1 = np.empty(n, dtype=np.complex128)
    k2 = np.empty(n, dtype=np.complex128)
    k3 = np.empty(n, dtype=np.complex128)
    k4 = np.empty(n, dtype=np.complex128)
    mu, res = _mu_res(y, E, J, g, hpsi)
    it = 0
    nh = history.shape[0]
    while res >= tol and it < max_iter:
        _flow(y, E, J, g, hpsi, k1)
        _flow(y + 0.5 * dtau * k1, E, J, g, hpsi, k2)
        _flow(y + 0.5 * dtau * k2, E, J, g, hpsi, k3)
        _flow(y + dtau * k3, E, J, g, hpsi, k4)
        y = y + dtau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        y = y * np.sqrt(norm / np.sum(np.abs(y) ** 2))
        mu, res = _mu_res(y, E, J, g, hpsi)
        if it < nh:
            history[it, 0] = res
            history[it, 1] = energy_nb(y, E, J, g)
        it += 1
    return y, mu, res, it


@njit(cache=True)
def energy_nb(psi, E, J, g):
    """Mean-field energy functional sum E n - sum J C + g n^2 / 2."""
    e = 0.0
    n = psi.shape[0]
    for k in range(n):
        nk = psi[k].real ** 2 + psi[k].imag ** 2
        e += E[k] * nk + 0.5 * g[k] * nk * nk
        if k < n - 1:
            e -= J[k] * 2.0 * (psi[k] * np.conj(psi[k + 1])).real
    return e


def stationarity_residual(psi, params: LatticeParameters) -> tuple[float, float]:
    """Chemical potential and ||H psi - mu psi|| / ||psi||."""
    a = _amps(psi).astype(np.complex128)
    if not np.any(a):
        raise ValueError("zero-norm state")
    hpsi = np.empty_like(a)
    return _mu_res(a, params.energies, np.ascontiguousarray(params.tunnelings),
                   params.interactions, hpsi)


def energy(psi, params: LatticeParameters) -> float:
    return energy_nb(_amps(psi).astype(np.complex128), params.energies,
                     np.ascontiguousarray(params.tunnelings), params.interactions)


def ground_state(req: GroundStateRequest, history: int = 0):
    """Imaginary-time ground state from a uniform positive start.

    Returns (state, mu). With ``history > 0`` also returns an array of
    (residual, energy) for the first ``history`` iterations.
    """
    p = req.params
    start = np.ones(p.n_wells, dtype=np.complex128)
    hist = np.zeros((history, 2))
    y, mu, res, it = imaginary_time_nb(start, p.energies, np.ascontiguousarray(p.tunnelings),
                                       p.interactions, float(req.total_norm), float(req.dtau),
                                       float(req.tolerance), int(req.max_iterations), hist)
    if not res < req.tolerance:
        raise GroundStateNotConverged(
            f"residual {res:.3e} after {it} iterations (tolerance {req.tolerance:g})")
    # fix the global phase so the state is real and positive
    k = int(np.argmax(np.abs(y)))
    y = y * np.exp(-1j * np.angle(y[k]))
    y = y.real.astype(np.complex128)
    state = LatticeWavefunction(y, 0.0)
    if history:
        return state, float(mu), hist[:min(it, history)]
    return state, float(mu)
