"""Onsite energies of the reservoir wells (all wells except m-1, m, m+1, m+2).

Target currents in the specific-current mode are tied to the embedded gain and
loss currents,

    j^tar_{k,k+1}(t) = w_k * 2 Gamma(t) n_m(t) + c_k        (left of m-1)
    j^tar_{k,k+1}(t) = w_k * 2 Gamma(t) n_{m+1}(t) + c_k    (right of m+2)

so their time derivatives are available in closed form from Gamma' and the
instantaneous dn/dt of the embedded wells.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .lattice import HBAR, LatticeParameters, _amps, corr_nb, hop_nb, mcurr_nb, zeta_nb

LEVEL_OUT = 0
SPECIFIC = 1
STARK = 2

_KINDS = {"level-out": LEVEL_OUT, "specific-currents": SPECIFIC,
          "proportional-currents": SPECIFIC, "stark-lattice": STARK}


class ReservoirBreakdown(RuntimeError):
    pass


@dataclass(frozen=True)
class ReservoirStrategy:
    kind: str = "level-out"
    weights: np.ndarray | None = field(default=None, compare=False)
    offsets: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown reservoir strategy {self.kind!r}")

    @classmethod
    def level_out(cls) -> "ReservoirStrategy":
        return cls("level-out")

    @classmethod
    def stark_lattice(cls) -> "ReservoirStrategy":
        return cls("stark-lattice")

    @classmethod
    def specific_currents(cls, weights, offsets=None) -> "ReservoirStrategy":
        w = np.asarray(weights, dtype=float)
        c = np.zeros_like(w) if offsets is None else np.asarray(offsets, dtype=float)
        return cls("specific-currents", w, c)

    @classmethod
    def proportional(cls, populations, m: int) -> "ReservoirStrategy":
        w = proportional_weights(populations, m)
        return cls("proportional-currents", w, np.zeros_like(w))

    @property
    def code(self) -> int:
        return _KINDS[self.kind]

    def arrays(self, n_wells: int) -> tuple[np.ndarray, np.ndarray]:
        if self.code != SPECIFIC:
            return np.zeros(n_wells - 1), np.zeros(n_wells - 1)
        if self.weights.size != n_wells - 1:
            raise ValueError(f"need {n_wells - 1} link weights, got {self.weights.size}")
        return (np.ascontiguousarray(self.weights, dtype=float),
                np.ascontiguousarray(self.offsets, dtype=float))

    def fill(self, psi, E, J, g, m0, G, Gd):
        w, c = self.arrays(E.size)
        status = fill_nb(psi, E, J, g, m0, G, Gd, self.code, w, c)
        if status != 0:
            raise ReservoirBreakdown("vanishing C_{k,k+1} on a reservoir link")

    def targets(self, psi, G: float, m: int) -> np.ndarray:
        """Target currents j^tar_{k,k+1} per link; NaN where none is imposed."""
        a = _amps(psi)
        N = a.size
        out = np.full(N - 1, np.nan)
        if self.code != SPECIFIC:
            return out
        w, c = self.arrays(N)
        m0 = m - 1
        left = 2.0 * G * abs(a[m0]) ** 2 / HBAR
        right = 2.0 * G * abs(a[m0 + 1]) ** 2 / HBAR
        out[:m0 - 1] = w[:m0 - 1] * left + c[:m0 - 1]
        out[m0 + 2:] = w[m0 + 2:] * right + c[m0 + 2:]
        return out

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "specific-currents":
            out["weights"] = [float(x) for x in self.weights]
            out["offsets"] = [float(x) for x in self.offsets]
        return out


def proportional_weights(populations, m: int) -> np.ndarray:
    """Link weights for depletion (filling) rates proportional to the initial populations."""
    n = np.asarray(populations, dtype=float)
    N, m0 = n.size, m - 1
    left = np.cumsum(n[:m0])
    right = np.cumsum(n[::-1])[::-1]  # right[k] = sum_{i >= k} n_i
    if left[-1] <= 0:
        raise ValueError("left reservoir is empty")
    if right[m0 + 2] <= 0:
        raise ValueError("right reservoir is empty")
    w = np.zeros(N - 1)
    for k0 in range(m0 - 1):
        w[k0] = left[k0] / left[-1]
    for k0 in range(m0 + 2, N - 1):
        w[k0] = right[k0 + 1] / right[m0 + 2]
    return w


def proportional_targets(populations, schedule, m: int, n_wells: int | None = None):
    """Target current function t, n_m, n_{m+1} -> j^tar for proportional depletion."""
    n = np.asarray(populations, dtype=float)
    if n_wells is not None and n_wells != n.size:
        raise ValueError("population vector does not match n_wells")
    w = proportional_weights(n, m)
    m0 = m - 1

    def targets(t, n_m=None, n_m1=None):
        G, _ = schedule(t)
        nm = n[m0] if n_m is None else n_m
        nm1 = n[m0 + 1] if n_m1 is None else n_m1
        out = np.full(n.size - 1, np.nan)
        out[:m0 - 1] = w[:m0 - 1] * 2.0 * G * nm / HBAR
        out[m0 + 2:] = w[m0 + 2:] * 2.0 * G * nm1 / HBAR
        return out

    return targets


def level_out(E_left: float, E_right: float, n_wells: int, m: int) -> np.ndarray:
    if n_wells < 4:
        raise ValueError("need at least four wells")
    E = np.zeros(n_wells)
    m0 = m - 1
    E[:m0] = E_left
    E[m0 + 2:] = E_right
    return E


def stark_extension(E_left: float, E_right: float, m: int, n_wells: int):
    """Slope, offset and full energies of a Stark lattice through E_{m-1}, E_{m+2}."""
    if n_wells < 4:
        raise ValueError("need at least four wells")
    slope = (E_right - E_left) / 3.0
    offset = 0.5 * (E_left + E_right)
    k = np.arange(1, n_wells + 1)
    E = (k - (m + 0.5)) * slope + offset
    E[m - 1] = E[m] = 0.0
    return slope, offset, E


def specific_current_energies(psi, params: LatticeParameters, dtargets, m: int) -> np.ndarray:
    """Energies making the reservoir currents follow targets with derivatives ``dtargets``.

    ``params`` must carry the controlled tunnelings and the solved E_{m-1},
    E_{m+2}; iteration runs outward from those anchors.
    """
    a = _amps(psi)
    E = np.array(params.energies)
    J = np.ascontiguousarray(params.tunnelings)
    dj = np.nan_to_num(np.asarray(dtargets, dtype=float))
    if specific_nb(a, E, J, params.interactions, m - 1, dj) != 0:
        raise ReservoirBreakdown("vanishing C_{k,k+1} or J_{k,k+1} on a reservoir link")
    return E


@njit(cache=True)
def specific_nb(psi, E, J, g, m0, jdot):
    N = psi.shape[0]
    for k in range(m0 - 2, -1, -1):
        C = corr_nb(psi, k, k + 1)
        if C == 0.0 or J[k] == 0.0:
            return 1
        n_k = psi[k].real ** 2 + psi[k].imag ** 2
        n_k1 = psi[k + 1].real ** 2 + psi[k + 1].imag ** 2
        E[k] = (HBAR * HBAR * jdot[k] / (J[k] * C) + zeta_nb(psi, J, k, k + 1) / C
                + E[k + 1] - g[k] * n_k + g[k + 1] * n_k1)
    for k in range(m0 + 2, N - 1):
        C = corr_nb(psi, k, k + 1)
        if C == 0.0 or J[k] == 0.0:
            return 1
        n_k = psi[k].real ** 2 + psi[k].imag ** 2
        n_k1 = psi[k + 1].real ** 2 + psi[k + 1].imag ** 2
        E[k + 1] = (-HBAR * HBAR * jdot[k] / (J[k] * C) - zeta_nb(psi, J, k, k + 1) / C
                    + E[k] + g[k] * n_k - g[k + 1] * n_k1)
    return 0


@njit(cache=True)
def fill_nb(psi, E, J, g, m0, G, Gd, kind, weights, offsets):
    N = psi.shape[0]
    a, b, c, e = m0 - 1, m0, m0 + 1, m0 + 2
    if kind == LEVEL_OUT:
        for k in range(a):
            E[k] = E[a]
        for k in range(e + 1, N):
            E[k] = E[e]
        return 0
    if kind == STARK:
        slope = (E[e] - E[a]) / 3.0
        offset = 0.5 * (E[a] + E[e])
        for k in range(N):
            if k != b and k != c:
                E[k] = (k - m0 - 0.5) * slope + offset
        return 0
    n_b = psi[b].real ** 2 + psi[b].imag ** 2
    n_c = psi[c].real ** 2 + psi[c].imag ** 2
    j_ab = hop_nb(J, a) * mcurr_nb(psi, a, b) / HBAR
    j_bc = hop_nb(J, b) * mcurr_nb(psi, b, c) / HBAR
    j_ce = hop_nb(J, c) * mcurr_nb(psi, c, e) / HBAR
    src_left = 2.0 * (Gd * n_b + G * (j_ab - j_bc)) / HBAR
    src_right = 2.0 * (Gd * n_c + G * (j_bc - j_ce)) / HBAR
    jdot = np.zeros(N - 1)
    for k in range(a):
        jdot[k] = weights[k] * src_left
    for k in range(e, N - 1):
        jdot[k] = weights[k] * src_right
    return specific_nb(psi, E, J, g, m0, jdot)
