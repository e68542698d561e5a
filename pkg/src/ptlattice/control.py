"""Closed-loop control that makes wells m, m+1 of a Hermitian chain behave as a PT dimer.

Per evaluation, with the state psi and the gain/loss rate Gamma(t):

1. the gauge d(t) fixes the tunnelings  J_{m-1,m} = d C_{m,m+2},
   J_{m+1,m+2} = d C_{m-1,m+1}, so the correlation condition holds identically;
2. E_{m-1}, E_{m+2} solve a 2x2 linear system that keeps the current
   conditions  j_{m-1,m} = 2 Gamma n_m,  j_{m+1,m+2} = 2 Gamma n_{m+1}
   stationary in time.

The conditions themselves must hold at t = 0 (see :func:`initialize_state`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import optimize

from .lattice import (HBAR, LatticeParameters, LatticeWavefunction, _amps, corr_nb, eta_nb,
                      hop_nb, mcurr_nb, zeta_nb)

DET_EPS = 1e-12

CONSTANT_D = 0
COMPENSATING_D = 1

# v-vector closure: how -2 Gamma dn/dt enters the right-hand side
CLOSURE_EXACT = 0  # uses the instantaneous dn/dt of the Hermitian chain
CLOSURE_SUBSTITUTED = 1  # uses dn/dt with the current conditions substituted

OK = 0
SINGULAR = 1
GAUGE_SINGULAR = 2
RESERVOIR_SINGULAR = 3


class ControlBreakdown(RuntimeError):
    """The energy system (or gauge) cannot be solved for the current state."""


class SingularGaugeError(ControlBreakdown):
    pass


class InfeasibleInitialization(ValueError):
    pass


@dataclass(frozen=True)
class DStrategy:
    """Choice of the free gauge function d(t).

    ``constant`` keeps d = d0. ``compensating`` averages the two values of d
    that would pin J_{m-1,m} and J_{m+1,m+2} to ``j_left0`` and ``j_right0``.
    """

    kind: str = "constant"
    d0: float = 1.0
    j_left0: float = 1.0
    j_right0: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "compensating"):
            raise ValueError(f"unknown d strategy {self.kind!r}")
        if self.kind == "constant" and self.d0 == 0:
            raise ValueError("constant gauge needs d0 != 0")

    @classmethod
    def constant(cls, d0: float) -> "DStrategy":
        return cls("constant", d0=float(d0))

    @classmethod
    def compensating(cls, j_left0: float = 1.0, j_right0: float = 1.0) -> "DStrategy":
        return cls("compensating", j_left0=float(j_left0), j_right0=float(j_right0))

    @property
    def code(self) -> int:
        return COMPENSATING_D if self.kind == "compensating" else CONSTANT_D

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "d0": self.d0}
        return {"kind": "compensating", "j_left0": self.j_left0, "j_right0": self.j_right0}


@dataclass
class ControlState:
    d: float
    Dm1: float
    Dp2: float
    D: float
    J_left: float
    J_right: float
    E_left: float
    E_right: float
    det_numeric: float
    det_analytic: float = math.nan
    sign: int = 0


# --------------------------------------------------------------------------
# compiled kernels; m0 is the 0-based index of well m


@njit(cache=True)
def gauge_nb(psi, J, g, m0, kind, d0, jl0, jr0):
    """Sets the controlled links of J in place and returns (d, Dm1, Dp2, D, status)."""
    a, b, c, e = m0 - 1, m0, m0 + 1, m0 + 2
    C_be = corr_nb(psi, b, e)
    C_ac = corr_nb(psi, a, c)
    if kind == CONSTANT_D:
        d = d0
    else:
        if C_be == 0.0 or C_ac == 0.0:
            return np.nan, np.nan, np.nan, np.nan, GAUGE_SINGULAR
        d = jl0 / (2.0 * C_be) + jr0 / (2.0 * C_ac)
    J[a] = d * C_be
    J[c] = d * C_ac
    if kind == CONSTANT_D:
        return d, 0.0, 0.0, 0.0, OK
    n = np.empty(4)
    for i in range(4):
        n[i] = psi[a + i].real ** 2 + psi[a + i].imag ** 2
    jt_be = mcurr_nb(psi, b, e)
    jt_ac = mcurr_nb(psi, a, c)
    kl = jl0 / (2.0 * C_be * C_be)
    kr = jr0 / (2.0 * C_ac * C_ac)
    Dm1 = kr * jt_ac
    Dp2 = -kl * jt_be
    D = (-kl * (g[e] * n[3] - g[b] * n[1]) * jt_be
         - kr * (g[c] * n[2] - g[a] * n[0]) * jt_ac
         - kl * eta_nb(psi, J, b, e)
         - kr * eta_nb(psi, J, a, c))
    return d, Dm1, Dp2, D, OK


@njit(cache=True)
def assemble_nb(psi, J, g, m0, d, Dm1, Dp2, D, G, Gd, closure):
    """Coefficient matrix and right-hand side for (E_{m-1}, E_{m+2})."""
    a, b, c, e = m0 - 1, m0, m0 + 1, m0 + 2
    n_a = psi[a].real ** 2 + psi[a].imag ** 2
    n_b = psi[b].real ** 2 + psi[b].imag ** 2
    n_c = psi[c].real ** 2 + psi[c].imag ** 2
    n_e = psi[e].real ** 2 + psi[e].imag ** 2
    C_ab = corr_nb(psi, a, b)
    C_be = corr_nb(psi, b, e)
    C_ac = corr_nb(psi, a, c)
    C_ce = corr_nb(psi, c, e)
    jt_ab = mcurr_nb(psi, a, b)
    jt_be = mcurr_nb(psi, b, e)
    jt_ac = mcurr_nb(psi, a, c)
    jt_ce = mcurr_nb(psi, c, e)
    j_bc = hop_nb(J, b) * mcurr_nb(psi, b, c) / HBAR
    M = np.empty((2, 2))
    v = np.empty(2)
    M[0, 0] = C_be * (Dm1 * jt_ab + d * C_ab)
    M[0, 1] = jt_ab * (Dp2 * C_be + d * jt_be)
    M[1, 0] = Dm1 * C_ac * jt_ce - d * jt_ac * jt_ce
    M[1, 1] = Dp2 * C_ac * jt_ce - d * C_ac * C_ce
    if closure == CLOSURE_EXACT:
        j_ab = J[a] * jt_ab / HBAR
        j_ce = J[c] * jt_ce / HBAR
        flow_b = 2.0 * HBAR * G * (j_ab - j_bc)
        flow_c = 2.0 * HBAR * G * (j_bc - j_ce)
    else:
        flow_b = -2.0 * HBAR * G * j_bc + 4.0 * G * G * n_b
        flow_c = 2.0 * HBAR * G * j_bc - 4.0 * G * G * n_c
    v[0] = (2.0 * HBAR * Gd * n_b + flow_b
            - D * jt_ab * C_be - d * jt_ab * eta_nb(psi, J, b, e)
            - d * jt_ab * jt_be * (g[e] * n_e - g[b] * n_b)
            - d * C_ab * C_be * (g[a] * n_a - g[b] * n_b)
            + d * C_be * zeta_nb(psi, J, a, b))
    v[1] = (2.0 * HBAR * Gd * n_c + flow_c
            - D * C_ac * jt_ce - d * jt_ce * eta_nb(psi, J, a, c)
            - d * jt_ac * jt_ce * (g[c] * n_c - g[a] * n_a)
            - d * C_ac * C_ce * (g[c] * n_c - g[e] * n_e)
            + d * C_ac * zeta_nb(psi, J, c, e))
    return M, v


@njit(cache=True)
def solve2_nb(M, v, eps):
    """Cramer's rule; status SINGULAR if |det| <= eps * |row1| |row2|."""
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    scale = (np.sqrt(M[0, 0] ** 2 + M[0, 1] ** 2) * np.sqrt(M[1, 0] ** 2 + M[1, 1] ** 2))
    if not abs(det) > eps * scale:
        return np.nan, np.nan, det, scale, SINGULAR
    x = (v[0] * M[1, 1] - M[0, 1] * v[1]) / det
    y = (M[0, 0] * v[1] - M[1, 0] * v[0]) / det
    return x, y, det, scale, OK


@njit(cache=True)
def analytic_det_nb(psi, d, G, kind, m0):
    """Both branches of the closed-form determinant plus (alpha, beta, gamma, radicand)."""
    a, b, c, e = m0 - 1, m0, m0 + 1, m0 + 2
    n_a = psi[a].real ** 2 + psi[a].imag ** 2
    n_b = psi[b].real ** 2 + psi[b].imag ** 2
    n_c = psi[c].real ** 2 + psi[c].imag ** 2
    n_e = psi[e].real ** 2 + psi[e].imag ** 2
    prod = n_a * n_b * n_c * n_e
    if prod == 0.0:
        return 0.0, 0.0, np.nan, np.nan, np.nan, np.nan
    beta = G / (d * np.sqrt(n_a * n_e))
    gam = mcurr_nb(psi, b, c) / (2.0 * np.sqrt(n_b * n_c))
    alpha = (beta + gam) * gam
    rad = (1.0 - alpha) ** 2 - beta ** 2
    root = np.sqrt(rad) if rad > 0.0 else 0.0
    if kind == CONSTANT_D:
        pre = 16.0 * d * d * prod
        return pre * root, -pre * root, alpha, beta, gam, rad
    pre = 8.0 * d * d * prod
    return pre * (root + gam * gam - 1.0), pre * (-root + gam * gam - 1.0), alpha, beta, gam, rad


@njit(cache=True)
def residuals_nb(psi, J, G, m0):
    a, b, c, e = m0 - 1, m0, m0 + 1, m0 + 2
    n_b = psi[b].real ** 2 + psi[b].imag ** 2
    n_c = psi[c].real ** 2 + psi[c].imag ** 2
    r1 = J[a] * mcurr_nb(psi, a, b) - 2.0 * G * n_b
    r2 = J[c] * mcurr_nb(psi, c, e) - 2.0 * G * n_c
    r3 = J[a] * corr_nb(psi, a, c) - J[c] * corr_nb(psi, b, e)
    r4 = J[a] * mcurr_nb(psi, a, c) - J[c] * mcurr_nb(psi, b, e)
    return r1, r2, r3, r4


# --------------------------------------------------------------------------
# public API (m is the 1-based index of the first embedded well)


def _m0(m: int, n_wells: int) -> int:
    if not (2 <= m and m + 2 <= n_wells):
        raise IndexError(f"embedded index m={m} needs 2 <= m and m + 2 <= {n_wells}")
    return m - 1


def gauge_value(psi, strategy: DStrategy, m: int,
                params: LatticeParameters | None = None) -> tuple[float, float, float, float]:
    """(d, Dm1, Dp2, D) with hbar d' = Dm1 E_{m-1} + Dp2 E_{m+2} + D."""
    a = _amps(psi)
    if params is None:
        params = LatticeParameters.uniform(a.size)
    J = np.array(params.tunnelings)
    d, Dm1, Dp2, D, status = gauge_nb(a, J, params.interactions, _m0(m, a.size), strategy.code,
                                      strategy.d0, strategy.j_left0, strategy.j_right0)
    if status != OK:
        raise SingularGaugeError("compensating gauge needs C_{m,m+2} != 0 and C_{m-1,m+1} != 0")
    return d, Dm1, Dp2, D


def controlled_tunnelings(psi, d: float, m: int) -> tuple[float, float]:
    a = _amps(psi)
    m0 = _m0(m, a.size)
    return d * corr_nb(a, m0, m0 + 2), d * corr_nb(a, m0 - 1, m0 + 1)


def assemble_energy_system(psi, params: LatticeParameters, dtuple, G: float, Gd: float, m: int,
                           closure: int = CLOSURE_EXACT) -> tuple[np.ndarray, np.ndarray]:
    """Linear system M (E_{m-1}, E_{m+2}) = v.

    ``params`` must already carry the controlled tunnelings. Links outside the
    chain count as zero.
    """
    a = _amps(psi)
    d, Dm1, Dp2, D = dtuple
    return assemble_nb(a, np.ascontiguousarray(params.tunnelings), params.interactions,
                       _m0(m, a.size), d, Dm1, Dp2, D, G, Gd, closure)


def solve_energies(M: np.ndarray, v: np.ndarray, eps: float = DET_EPS) -> tuple[float, float]:
    M = np.asarray(M, dtype=float)
    v = np.asarray(v, dtype=float)
    x, y, det, scale, status = solve2_nb(M, v, eps)
    if status != OK:
        raise ControlBreakdown(f"control breakdown: |det M| = {abs(det):.3e} <= {eps:g} * {scale:.3e}")
    return x, y


def analytic_determinant(psi, dtuple, G: float, strategy: DStrategy, m: int,
                         sign: int) -> tuple[float, float, float, float]:
    """Closed-form det M on the chosen branch, with (alpha, beta, gamma).

    Raises :class:`ControlBreakdown` if the square-root argument is negative.
    """
    a = _amps(psi)
    plus, minus, alpha, beta, gam, rad = analytic_det_nb(a, dtuple[0], G, strategy.code,
                                                         _m0(m, a.size))
    if rad < 0:
        raise ControlBreakdown(f"complex branch: (1-alpha)^2 - beta^2 = {rad:.3e} < 0")
    return (plus if sign > 0 else minus), alpha, beta, gam


def condition_residuals(psi, params: LatticeParameters, G: float, m: int):
    a = _amps(psi)
    return residuals_nb(a, np.ascontiguousarray(params.tunnelings), G, _m0(m, a.size))


def choose_branch(det_numeric: float, det_plus: float, det_minus: float) -> int:
    return 1 if abs(det_numeric - det_plus) <= abs(det_numeric - det_minus) else -1


class Controller:
    """Evaluates the full control chain for the embedded wells.

    Reservoir energies (wells outside m-1..m+2) are filled in by
    ``reservoir`` (see :mod:`ptlattice.reservoir`); without one they keep the
    values in ``base``.
    """

    def __init__(self, base: LatticeParameters, m: int, schedule, strategy: DStrategy,
                 reservoir=None, closure: int = CLOSURE_EXACT):
        if base.interactions[m - 1] != base.interactions[m]:
            raise ValueError("embedded wells need equal interaction strengths g_m = g_{m+1}")
        self.base = base
        self.m = m
        self.m0 = _m0(m, base.n_wells)
        self.schedule = schedule
        self.strategy = strategy
        self.reservoir = reservoir
        self.closure = closure
        self.sign = 0

    def evaluate(self, t: float, psi) -> tuple[LatticeParameters, ControlState]:
        a = _amps(psi)
        G, Gd = self.schedule(t)
        J = np.array(self.base.tunnelings)
        E = np.array(self.base.energies)
        g = self.base.interactions
        s = self.strategy
        d, Dm1, Dp2, D, status = gauge_nb(a, J, g, self.m0, s.code, s.d0, s.j_left0, s.j_right0)
        if status != OK:
            raise SingularGaugeError(f"singular gauge at t={t:g}")
        M, v = assemble_nb(a, J, g, self.m0, d, Dm1, Dp2, D, G, Gd, self.closure)
        EL, ER, det, scale, status = solve2_nb(M, v, DET_EPS)
        if status != OK:
            raise ControlBreakdown(f"control breakdown at t={t:g}: |det M| = {abs(det):.3e}")
        E[self.m0 - 1], E[self.m0], E[self.m0 + 1], E[self.m0 + 2] = EL, 0.0, 0.0, ER
        if self.reservoir is not None:
            self.reservoir.fill(a, E, J, g, self.m0, G, Gd)
        plus, minus, *_ = analytic_det_nb(a, d, G, s.code, self.m0)
        if self.sign == 0:
            self.sign = choose_branch(det, plus, minus)
        state = ControlState(d, Dm1, Dp2, D, J[self.m0 - 1], J[self.m0 + 1], EL, ER, det,
                             plus if self.sign > 0 else minus, self.sign)
        return LatticeParameters(E, J, g), state

    def provider(self):
        return lambda t, y: self.evaluate(t, y)[0]


# --------------------------------------------------------------------------
# condition-consistent initial state


def _embedded_conditions(x, n, base_phases, J, g, m0, strategy, G):
    phases = base_phases.copy()
    phases[m0 - 1], phases[m0 + 2] = x
    psi = np.sqrt(n) * np.exp(1j * phases)
    Jw = J.copy()
    gauge_nb(psi, Jw, g, m0, strategy.code, strategy.d0, strategy.j_left0, strategy.j_right0)
    r1, r2, _, _ = residuals_nb(psi, Jw, G, m0)
    return np.array([r1, r2])


def initialize_state(populations, gamma0: float, params: LatticeParameters, m: int,
                     strategy: DStrategy, targets=None, embedded_phases=(0.0, 0.0),
                     tol: float = 1e-12) -> LatticeWavefunction:
    """Amplitudes sqrt(n_k) e^{i phi_k} satisfying the current conditions at t = 0.

    The embedded phases are fixed by ``embedded_phases``; phi_{m-1} and phi_{m+2}
    are solved from the two current conditions, and further reservoir phases
    from ``targets`` (array of j_{k,k+1}, NaN where unconstrained, in which case
    the link carries no current).
    """
    n = np.asarray(populations, dtype=float)
    N = n.size
    m0 = _m0(m, N)
    if np.any(n < 0):
        raise InfeasibleInitialization("populations must be non-negative")
    if np.any(n[m0 - 1:m0 + 3] <= 0):
        raise InfeasibleInitialization("wells m-1..m+2 must be populated")
    phases = np.zeros(N)
    phases[m0], phases[m0 + 1] = embedded_phases
    J = np.ascontiguousarray(params.tunnelings, dtype=float)
    g = params.interactions

    if gamma0 == 0.0:
        guess = np.array([phases[m0], phases[m0 + 1]])
    else:
        # closed form for constant d and equal embedded phases; a starting guess otherwise
        Jw = J.copy()
        psi0 = np.sqrt(n).astype(complex)
        d = gauge_nb(psi0, Jw, g, m0, strategy.code, strategy.d0, strategy.j_left0,
                     strategy.j_right0)[0]
        beta = gamma0 / (d * math.sqrt(n[m0 - 1] * n[m0 + 2]))
        if strategy.kind == "constant" and abs(beta) > 1:
            raise InfeasibleInitialization(f"current conditions unreachable: beta = {beta:.4g} > 1")
        half = 0.5 * math.asin(max(-1.0, min(1.0, beta)))
        guess = np.array([phases[m0] - half, phases[m0 + 1] + half])
    args = (n, phases, J, g, m0, strategy, gamma0)
    sol = optimize.root(_embedded_conditions, guess, args=args, method="hybr",
                        options={"xtol": 1e-15})
    x = sol.x
    res = _embedded_conditions(x, *args)
    if not np.all(np.abs(res) < tol):
        sol = optimize.root(_embedded_conditions, x, args=args, method="lm",
                            options={"xtol": 1e-15, "ftol": 1e-16})
        x = sol.x
        res = _embedded_conditions(x, *args)
    if not np.all(np.abs(res) < tol):
        raise InfeasibleInitialization(f"current conditions not met at t=0 (residuals {res})")
    phases[m0 - 1], phases[m0 + 2] = x

    if targets is None:
        targets = np.full(N - 1, np.nan)
    targets = np.asarray(targets, dtype=float)
    for k0 in range(m0 - 2, -1, -1):
        phases[k0] = phases[k0 + 1] + _link_phase(targets[k0], J[k0], n[k0], n[k0 + 1], k0)
    for k0 in range(m0 + 2, N - 1):
        phases[k0 + 1] = phases[k0] - _link_phase(targets[k0], J[k0], n[k0], n[k0 + 1], k0)
    return LatticeWavefunction(np.sqrt(n) * np.exp(1j * phases), 0.0)


def _link_phase(target, J, n1, n2, k0):
    """phi_k - phi_{k+1} giving j_{k,k+1} = target (0 if unconstrained)."""
    if np.isnan(target) or target == 0.0:
        return 0.0
    denom = 2.0 * J * math.sqrt(n1 * n2) / HBAR
    if denom == 0.0 or abs(target / denom) > 1.0:
        raise InfeasibleInitialization(
            f"target current {target:.4g} on link ({k0 + 1},{k0 + 2}) unreachable")
    return math.asin(-target / denom)
