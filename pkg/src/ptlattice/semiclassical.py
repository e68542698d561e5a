"""Single-band lattice theory: dispersion, semiclassical packets, momentum transforms.

Sign convention: with onsite energies E_k = slope * k the force on a packet is
F = -slope, and the quasi-momentum obeys dq0/dt = F / hbar.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .lattice import HBAR, LatticeWavefunction, _amps


def dispersion(q, J: float = 1.0):
    return -2.0 * J * np.cos(q)


def group_velocity(q, J: float = 1.0):
    return 2.0 * J * np.sin(q) / HBAR


def inverse_effective_mass(q, J: float = 1.0):
    return 2.0 * J * np.cos(q) / HBAR ** 2


def effective_mass(q, J: float = 1.0):
    """hbar^2 / E''(q); signed infinity where cos q = 0."""
    if J == 0:
        raise ValueError("effective mass needs J != 0")
    inv = np.asarray(inverse_effective_mass(q, J), dtype=float)
    # cos(pi/2) is ~6e-17 in floating point, so snap tiny values to the pole
    pole = np.abs(inv) < 1e-12 * abs(J)
    safe = np.where(pole, 1.0, inv)
    out = np.where(pole, np.copysign(np.inf, inv), 1.0 / safe)
    return float(out) if out.ndim == 0 else out


def bloch_period(force: float) -> float:
    return 2.0 * math.pi * HBAR / abs(force)


def wrap(q: float) -> float:
    """Map q into [-pi, pi); values already inside are returned unchanged."""
    if -math.pi <= q < math.pi:
        return q
    return (q + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True)
class PacketState:
    q0: float = 0.0
    n0: float = 0.0
    dq: float = 0.05
    inv_mass: float = 0.0  # accumulated integral of dt / m_eff(q0(t))
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q0", wrap(float(self.q0)))


Force = Callable[[float], float]


def _as_force(force) -> Force:
    if callable(force):
        return force
    value = float(force)
    return lambda t: value


def evolve_packet(p: PacketState, force, dt: float, J: float = 1.0) -> PacketState:
    """One RK4 step of q0' = F(t)/hbar, n0' = v_g(q0), I' = 1/m_eff(q0)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    F = _as_force(force)
    t = p.time

    def f(tt, y):
        return np.array([F(tt) / HBAR, group_velocity(y[0], J), inverse_effective_mass(y[0], J)])

    y = np.array([p.q0, p.n0, p.inv_mass])
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return replace(p, q0=wrap(y[0]), n0=y[1], inv_mass=y[2], time=t + dt)


def packet_trajectory(p: PacketState, force, t_end: float, dt: float = 1e-2,
                      J: float = 1.0) -> tuple[np.ndarray, list[PacketState]]:
    """Evolve a packet to ``t_end``; returns the time grid and the states."""
    n = int(round((t_end - p.time) / dt))
    states = [p]
    for _ in range(n):
        p = evolve_packet(p, force, dt, J)
        states.append(p)
    return np.array([s.time for s in states]), states


def gaussian_packet(n_wells: int, n0: float, q0: float, dq: float) -> LatticeWavefunction:
    """(2 dq^2 / pi)^(1/4) exp(-dq^2 (n - n0)^2) exp(i q0 n), sites n = 1..N."""
    if not dq > 0:
        raise ValueError("dq must be positive")
    n = np.arange(1, n_wells + 1, dtype=float)
    amp = (2.0 * dq * dq / math.pi) ** 0.25
    psi = amp * np.exp(-dq * dq * (n - n0) ** 2) * np.exp(1j * q0 * n)
    return LatticeWavefunction(psi, 0.0)


def semiclassical_profile(p: PacketState, n_wells: int) -> LatticeWavefunction:
    """Gaussian packet propagated in the semiclassical approximation (global phase dropped).

    The momentum integral is extended to the whole real line, which needs
    the peak to stay clear of the zone edge.
    """
    if math.pi - abs(p.q0) < 5.0 * p.dq:
        warnings.warn(f"momentum peak q0={p.q0:.3f} within 5 dq of the zone edge", RuntimeWarning)
    if p.inv_mass == 0.0:
        return LatticeWavefunction(gaussian_packet(n_wells, p.n0, p.q0, p.dq).amplitudes, p.time)
    n = np.arange(1, n_wells + 1, dtype=float)
    amp = (2.0 * p.dq * p.dq / math.pi) ** 0.25
    a = 1.0 / (4.0 * p.dq * p.dq) + 0.5j * HBAR * p.inv_mass
    psi = amp / (2.0 * p.dq * np.sqrt(a)) * np.exp(-(n - p.n0) ** 2 / (4.0 * a)) \
        * np.exp(1j * p.q0 * n)
    return LatticeWavefunction(psi, p.time)


@dataclass(frozen=True)
class MomentumSpectrum:
    q: np.ndarray
    amplitudes: np.ndarray

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def peak(self) -> float:
        return float(self.q[np.argmax(self.power)])

    @property
    def spacing(self) -> float:
        return 2.0 * math.pi / self.q.size


def momentum_grid(n_wells: int) -> np.ndarray:
    """q = 2 pi m / L, m = -(L-1)/2..(L-1)/2 (odd L) or -L/2..L/2-1 (even L)."""
    return 2.0 * math.pi * np.fft.fftshift(np.fft.fftfreq(n_wells))


def momentum_transform(psi) -> MomentumSpectrum:
    """psi~(q) = (1/2pi) sum_k exp(-i q k) psi_k on the finite-lattice grid.

    Parseval: sum_q |psi~|^2 = L / (4 pi^2) sum_k |psi_k|^2.
    """
    a = _amps(psi)
    L = a.size
    q = momentum_grid(L)
    F = np.fft.fftshift(np.fft.fft(a))
    return MomentumSpectrum(q, np.exp(-1j * q) * F / (2.0 * math.pi))


def parseval_constant(n_wells: int) -> float:
    return n_wells / (4.0 * math.pi ** 2)


def packet_center(psi) -> float:
    """Population-weighted mean site (1-based)."""
    a = _amps(psi)
    n = np.abs(a) ** 2
    return float(np.sum(np.arange(1, a.size + 1) * n) / np.sum(n))
