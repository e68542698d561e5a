"""Discrete nonlinear Schroedinger lattice: state, observables and RK4 propagation.

Units: hbar = 1 and energies in units of the embedded tunneling element.
Public functions take 1-based well indices; the ``_nb`` kernels below work on
0-based arrays and are shared with the compiled scenario engine.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from numba import njit

HBAR = 1.0
EMPTY_WELL = 1e-9


class BlowUpError(FloatingPointError):
    """Raised when a propagation step produces a non-finite state."""


@dataclass(frozen=True)
class LatticeWavefunction:
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).ravel()
        if amps.size < 2:
            raise ValueError(f"need at least two wells, got {amps.size}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes contain NaN or Inf")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "time", float(self.time))

    @property
    def n_wells(self) -> int:
        return self.amplitudes.size

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class LatticeParameters:
    """Onsite energies E_k, tunnelings J_{k,k+1} and interaction strengths g_k."""

    energies: np.ndarray
    tunnelings: np.ndarray
    interactions: np.ndarray = field(default=None)

    def __post_init__(self):
        E = np.array(self.energies, dtype=float).ravel()
        J = np.array(self.tunnelings, dtype=float).ravel()
        if self.interactions is None:
            g = np.zeros_like(E)
        else:
            g = np.broadcast_to(np.asarray(self.interactions, dtype=float), E.shape).copy()
        if J.size != E.size - 1:
            raise ValueError(f"expected {E.size - 1} tunnelings for {E.size} wells, got {J.size}")
        for name, arr in (("energies", E), ("tunnelings", J), ("interactions", g)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            arr.setflags(write=False)
        object.__setattr__(self, "energies", E)
        object.__setattr__(self, "tunnelings", J)
        object.__setattr__(self, "interactions", g)

    @classmethod
    def uniform(cls, n_wells: int, energy: float = 0.0, tunneling: float = 1.0,
                interaction: float = 0.0) -> "LatticeParameters":
        return cls(np.full(n_wells, energy), np.full(n_wells - 1, tunneling),
                   np.full(n_wells, interaction))

    @property
    def n_wells(self) -> int:
        return self.energies.size

    def replace(self, **changes) -> "LatticeParameters":
        return replace(self, **changes)

    def hop(self, k: int) -> float:
        """J_{k,k+1} for 1-based k; zero outside the open chain."""
        if 1 <= k < self.n_wells:
            return float(self.tunnelings[k - 1])
        return 0.0


@dataclass
class ObservableSet:
    n: np.ndarray
    j: np.ndarray
    jt: dict = field(default_factory=dict)
    C: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# compiled primitives (0-based)


@njit(cache=True)
def corr_nb(psi, k, l):
    n = psi.shape[0]
    if k < 0 or l < 0 or k >= n or l >= n:
        return 0.0
    z = psi[k] * np.conj(psi[l])
    return 2.0 * z.real


@njit(cache=True)
def mcurr_nb(psi, k, l):
    n = psi.shape[0]
    if k < 0 or l < 0 or k >= n or l >= n:
        return 0.0
    z = psi[k] * np.conj(psi[l])
    return -2.0 * z.imag


@njit(cache=True)
def hop_nb(J, k):
    # link k couples wells k and k+1
    if k < 0 or k >= J.shape[0]:
        return 0.0
    return J[k]


@njit(cache=True)
def zeta_nb(psi, J, k, l):
    return (hop_nb(J, k - 1) * corr_nb(psi, k - 1, l) + hop_nb(J, k) * corr_nb(psi, k + 1, l)
            - hop_nb(J, l - 1) * corr_nb(psi, k, l - 1) - hop_nb(J, l) * corr_nb(psi, k, l + 1))


@njit(cache=True)
def eta_nb(psi, J, k, l):
    return (hop_nb(J, k - 1) * mcurr_nb(psi, k - 1, l) + hop_nb(J, k) * mcurr_nb(psi, k + 1, l)
            - hop_nb(J, l - 1) * mcurr_nb(psi, k, l - 1) - hop_nb(J, l) * mcurr_nb(psi, k, l + 1))


@njit(cache=True)
def rhs_nb(psi, E, J, g, out):
    n = psi.shape[0]
    for k in range(n):
        h = (E[k] + g[k] * (psi[k].real ** 2 + psi[k].imag ** 2)) * psi[k]
        if k > 0:
            h -= J[k - 1] * psi[k - 1]
        if k < n - 1:
            h -= J[k] * psi[k + 1]
        out[k] = -1j * h / HBAR


# --------------------------------------------------------------------------
# public API (1-based well indices)


def _amps(psi) -> np.ndarray:
    if isinstance(psi, LatticeWavefunction):
        return psi.amplitudes
    return np.asarray(psi, dtype=np.complex128)


def _check_index(k: int, n: int) -> int:
    if not 1 <= k <= n:
        raise IndexError(f"well index {k} outside 1..{n}")
    return k - 1


def correlation(psi, k: int, l: int) -> float:
    """C_kl = psi_k psi_l* + c.c."""
    a = _amps(psi)
    return corr_nb(a, _check_index(k, a.size), _check_index(l, a.size))


def modified_current(psi, k: int, l: int) -> float:
    """Dimensionless current i(psi_k psi_l* - c.c.)."""
    a = _amps(psi)
    return mcurr_nb(a, _check_index(k, a.size), _check_index(l, a.size))


def link_currents(psi, params: LatticeParameters) -> np.ndarray:
    """Physical currents j_{k,k+1}, k = 1..N-1."""
    a = _amps(psi)
    jt = -2.0 * np.imag(a[:-1] * np.conj(a[1:]))
    return params.tunnelings * jt / HBAR


def observables(psi, params: LatticeParameters, pairs: Iterable[tuple[int, int]] = ()) -> ObservableSet:
    a = _amps(psi)
    jt, C = {}, {}
    for k, l in pairs:
        i, j = _check_index(k, a.size), _check_index(l, a.size)
        jt[(k, l)] = mcurr_nb(a, i, j)
        C[(k, l)] = corr_nb(a, i, j)
    return ObservableSet(n=np.abs(a) ** 2, j=link_currents(a, params), jt=jt, C=C)


def zeta_eta(psi, params: LatticeParameters, k: int, l: int) -> tuple[float, float]:
    """Nearest-neighbour sums entering the derivatives of the modified current and C_kl.

    Terms referring to links outside the chain are zero.
    """
    a = _amps(psi)
    i, j = _check_index(k, a.size), _check_index(l, a.size)
    J = np.ascontiguousarray(params.tunnelings)
    return zeta_nb(a, J, i, j), eta_nb(a, J, i, j)


def current_derivative(psi, params: LatticeParameters, k: int, l: int) -> float:
    """d/dt of the modified current j~_kl from the instantaneous state."""
    a = _amps(psi)
    i, j = _check_index(k, a.size), _check_index(l, a.size)
    eps = params.energies + params.interactions * np.abs(a) ** 2
    zeta, _ = zeta_eta(a, params, k, l)
    return ((eps[i] - eps[j]) * corr_nb(a, i, j) - zeta) / HBAR


def correlation_derivative(psi, params: LatticeParameters, k: int, l: int) -> float:
    """d/dt of C_kl from the instantaneous state."""
    a = _amps(psi)
    i, j = _check_index(k, a.size), _check_index(l, a.size)
    eps = params.energies + params.interactions * np.abs(a) ** 2
    _, eta = zeta_eta(a, params, k, l)
    return ((eps[j] - eps[i]) * mcurr_nb(a, i, j) + eta) / HBAR


def gpe_rhs(psi, params: LatticeParameters) -> np.ndarray:
    a = _amps(psi)
    if params.n_wells != a.size:
        raise ValueError(f"parameters sized for {params.n_wells} wells, state has {a.size}")
    out = np.empty_like(a)
    rhs_nb(a, params.energies, params.tunnelings, params.interactions, out)
    return out


ParameterProvider = Callable[[float, np.ndarray], LatticeParameters]


def step(psi: LatticeWavefunction, provider: ParameterProvider | LatticeParameters,
         dt: float) -> LatticeWavefunction:
    """One classical RK4 step; the provider is re-evaluated at every stage."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if isinstance(provider, LatticeParameters):
        fixed = provider
        provider = lambda t, y: fixed  # noqa: E731
    t, y = psi.time, psi.amplitudes
    k1 = gpe_rhs(y, provider(t, y))
    y2 = y + 0.5 * dt * k1
    k2 = gpe_rhs(y2, provider(t + 0.5 * dt, y2))
    y3 = y + 0.5 * dt * k2
    k3 = gpe_rhs(y3, provider(t + 0.5 * dt, y3))
    y4 = y + dt * k3
    k4 = gpe_rhs(y4, provider(t + dt, y4))
    new = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(new)):
        raise BlowUpError(f"non-finite state after step at t={t + dt:g}")
    return LatticeWavefunction(new, t + dt)


@njit(cache=True)
def propagate_fixed_nb(psi, E, J, g, dt, n_steps):
    """RK4 under a time-independent Hamiltonian; returns the final state."""
    y = psi.copy()
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    for _ in range(n_steps):
        rhs_nb(y, E, J, g, k1)
        rhs_nb(y + 0.5 * dt * k1, E, J, g, k2)
        rhs_nb(y + 0.5 * dt * k2, E, J, g, k3)
        rhs_nb(y + dt * k3, E, J, g, k4)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def evolve(psi: LatticeWavefunction, params: LatticeParameters, t: float, dt: float = 1e-3,
           sample_every: float | None = None) -> list[LatticeWavefunction]:
    """Propagate under fixed parameters; returns snapshots (first is the input)."""
    n_steps = int(round(t / dt))
    chunk = n_steps if sample_every is None else max(1, int(round(sample_every / dt)))
    E = np.ascontiguousarray(params.energies)
    J = np.ascontiguousarray(params.tunnelings)
    g = np.ascontiguousarray(params.interactions)
    out = [psi]
    y, done = psi.amplitudes.copy(), 0
    while done < n_steps:
        k = min(chunk, n_steps - done)
        y = propagate_fixed_nb(y, E, J, g, dt, k)
        done += k
        if not np.all(np.isfinite(y)):
            raise BlowUpError(f"non-finite state at t={psi.time + done * dt:g}")
        out.append(LatticeWavefunction(y, psi.time + done * dt))
    return out


def total_norm(psi) -> float:
    return float(np.sum(np.abs(_amps(psi)) ** 2))


def populations_to_state(populations: Sequence[float], phases: Sequence[float] | None = None,
                         time: float = 0.0) -> LatticeWavefunction:
    n = np.asarray(populations, dtype=float)
    if np.any(n < 0):
        raise ValueError("populations must be non-negative")
    phi = np.zeros_like(n) if phases is None else np.asarray(phases, dtype=float)
    return LatticeWavefunction(np.sqrt(n) * np.exp(1j * phi), time)
