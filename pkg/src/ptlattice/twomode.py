"""Reference integrator for the non-Hermitian PT-symmetric dimer.

    i dpsi1/dt = ( iG + g|psi1|^2) psi1 - J psi2
    i dpsi2/dt = (-iG + g|psi2|^2) psi2 - J psi1

Well 1 carries the gain, well 2 the loss.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np
from numba import njit

from .lattice import HBAR
from .schedule import GammaSchedule, gamma_nb


@dataclass(frozen=True)
class TwoModeParams:
    gamma: float = 0.0
    tunneling: float = 1.0
    interaction: float = 0.0


@dataclass(frozen=True)
class TwoModeState:
    psi1: complex
    psi2: complex

    @property
    def observables(self) -> tuple[float, float, float, float]:
        """(n1, n2, j~12, C12)."""
        return observables_nb(complex(self.psi1), complex(self.psi2))


@njit(cache=True)
def observables_nb(p1, p2):
    z = p1 * np.conj(p2)
    return abs(p1) ** 2, abs(p2) ** 2, -2.0 * z.imag, 2.0 * z.real


@njit(cache=True)
def rhs_nb(p1, p2, G, J, g):
    d1 = (G - 1j * g * (p1.real ** 2 + p1.imag ** 2)) * p1 + 1j * J * p2
    d2 = (-G - 1j * g * (p2.real ** 2 + p2.imag ** 2)) * p2 + 1j * J * p1
    return d1 / HBAR, d2 / HBAR


def two_mode_rhs_complex(state: TwoModeState, p: TwoModeParams) -> tuple[complex, complex]:
    return rhs_nb(complex(state.psi1), complex(state.psi2), p.gamma, p.tunneling, p.interaction)


def two_mode_rhs_observables(n1: float, n2: float, jt12: float, C12: float,
                             p: TwoModeParams) -> tuple[float, float, float, float]:
    """Closed real equations for (n1, n2, j~12, C12)."""
    J, G, g = p.tunneling, p.gamma, p.interaction
    j12 = J * jt12 / HBAR
    dn = n1 - n2
    return (-j12 + 2 * G * n1 / HBAR,
            j12 - 2 * G * n2 / HBAR,
            (2 * J * dn + g * dn * C12) / HBAR,
            -g * dn * jt12 / HBAR)


def linear_spectrum(tunneling: float, gamma: float) -> tuple[complex, complex]:
    """Eigenvalues of the g = 0 dimer, +-sqrt(J^2 - G^2)."""
    r = tunneling * tunneling - gamma * gamma
    if r >= 0:
        w = complex(np.sqrt(r), 0.0)
    else:
        w = complex(0.0, np.sqrt(-r))
    return w, -w


@njit(cache=True)
def integrate_nb(p1, p2, t0, dt, n_steps, stride, code, target, t_target, J, g):
    n_rec = n_steps // stride + 1
    out = np.empty((n_rec, 2), dtype=np.complex128)
    times = np.empty(n_rec)
    out[0, 0] = p1
    out[0, 1] = p2
    times[0] = t0
    r = 1
    for i in range(n_steps):
        t = t0 + i * dt
        G1, _ = gamma_nb(t, code, target, t_target)
        Gh, _ = gamma_nb(t + 0.5 * dt, code, target, t_target)
        G4, _ = gamma_nb(t + dt, code, target, t_target)
        a1, a2 = rhs_nb(p1, p2, G1, J, g)
        b1, b2 = rhs_nb(p1 + 0.5 * dt * a1, p2 + 0.5 * dt * a2, Gh, J, g)
        c1, c2 = rhs_nb(p1 + 0.5 * dt * b1, p2 + 0.5 * dt * b2, Gh, J, g)
        d1, d2 = rhs_nb(p1 + dt * c1, p2 + dt * c2, G4, J, g)
        p1 = p1 + dt / 6.0 * (a1 + 2.0 * b1 + 2.0 * c1 + d1)
        p2 = p2 + dt / 6.0 * (a2 + 2.0 * b2 + 2.0 * c2 + d2)
        if (i + 1) % stride == 0:
            out[r, 0] = p1
            out[r, 1] = p2
            times[r] = t0 + (i + 1) * dt
            r += 1
    return times[:r], out[:r]


def integrate(state: TwoModeState, schedule: GammaSchedule, t_end: float, dt: float = 1e-4,
              tunneling: float = 1.0, interaction: float = 0.0, t0: float = 0.0,
              stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """RK4 integration of the complex dimer. Returns sample times and (n_samples, 2) amplitudes."""
    n_steps = int(round((t_end - t0) / dt))
    return integrate_nb(complex(state.psi1), complex(state.psi2), float(t0), float(dt), n_steps,
                        int(stride), schedule.code, schedule.target, schedule.t_target,
                        float(tunneling), float(interaction))


def trajectory_observables(amps: np.ndarray) -> np.ndarray:
    """(n1, n2, j~12, C12) columns for an array of dimer amplitudes."""
    z = amps[:, 0] * np.conj(amps[:, 1])
    return np.column_stack([np.abs(amps[:, 0]) ** 2, np.abs(amps[:, 1]) ** 2,
                            -2.0 * z.imag, 2.0 * z.real])


def broken_phase_rate(tunneling: float, gamma: float) -> float:
    """Norm growth rate 2 sqrt(G^2 - J^2) of the amplifying broken-phase eigenstate."""
    return 2.0 * cmath.sqrt(gamma * gamma - tunneling * tunneling).real / HBAR
