"""Compiled simulation loop: controller + reservoir strategy + RK4, re-evaluated per stage."""
from __future__ import annotations

import numpy as np
from numba import njit

from .control import (OK, analytic_det_nb, assemble_nb, gauge_nb, residuals_nb, solve2_nb)
from .lattice import rhs_nb
from .reservoir import fill_nb
from .schedule import gamma_nb

# termination codes
COMPLETED = 0
SINGULAR_DET = 1
SINGULAR_GAUGE = 2
RESERVOIR_SINGULAR = 3
RESERVOIR_EMPTY = 4
BLOW_UP = 5
COMPLEX_BRANCH = 6
STIFF = 7

DIAG = ("t", "gamma", "gamma_dot", "d", "Dm1", "Dp2", "D", "J_left", "J_right", "E_left",
        "E_right", "det", "det_scale", "det_plus", "det_minus", "radicand", "r1", "r2", "r3",
        "r4", "slope", "offset", "det_analytic", "branch")
NDIAG = len(DIAG)


@njit(cache=True)
def control_nb(t, psi, E, J, E_base, J_base, g, m0, gcode, gtarget, gttar, dkind, d0, jl0, jr0,
               rkind, w, c, closure, pert, diag):
    """Fills E and J for state psi at time t. Returns a status code.

    ``pert`` scales (J_left, J_right, E_left, E_right) after solving; all ones
    in normal runs, used by sensitivity checks.
    """
    for k in range(E.shape[0]):
        E[k] = E_base[k]
    for k in range(J.shape[0]):
        J[k] = J_base[k]
    G, Gd = gamma_nb(t, gcode, gtarget, gttar)
    d, Dm1, Dp2, D, st = gauge_nb(psi, J, g, m0, dkind, d0, jl0, jr0)
    if st != OK:
        return SINGULAR_GAUGE
    M, v = assemble_nb(psi, J, g, m0, d, Dm1, Dp2, D, G, Gd, closure)
    EL, ER, det, scale, st = solve2_nb(M, v, 1e-12)
    if st != OK:
        return SINGULAR_DET
    J[m0 - 1] *= pert[0]
    J[m0 + 1] *= pert[1]
    EL *= pert[2]
    ER *= pert[3]
    E[m0 - 1] = EL
    E[m0] = 0.0
    E[m0 + 1] = 0.0
    E[m0 + 2] = ER
    if fill_nb(psi, E, J, g, m0, G, Gd, rkind, w, c) != 0:
        return RESERVOIR_SINGULAR
    diag[0] = t
    diag[1] = G
    diag[2] = Gd
    diag[3] = d
    diag[4] = Dm1
    diag[5] = Dp2
    diag[6] = D
    diag[7] = J[m0 - 1]
    diag[8] = J[m0 + 1]
    diag[9] = EL
    diag[10] = ER
    diag[11] = det
    diag[12] = scale
    return COMPLETED


@njit(cache=True)
def _emax(E):
    e = 0.0
    for k in range(E.shape[0]):
        if abs(E[k]) > e:
            e = abs(E[k])
    return e


@njit(cache=True)
def _finish_diag(psi, J, G, dkind, m0, diag):
    plus, minus, alpha, beta, gam, rad = analytic_det_nb(psi, diag[3], G, dkind, m0)
    diag[13] = plus
    diag[14] = minus
    diag[15] = rad
    r1, r2, r3, r4 = residuals_nb(psi, J, G, m0)
    diag[16] = r1
    diag[17] = r2
    diag[18] = r3
    diag[19] = r4
    diag[20] = (diag[10] - diag[9]) / 3.0
    diag[21] = 0.5 * (diag[9] + diag[10])


@njit(cache=True)
def run_nb(psi0, t0, dt, n_steps, stride, E_base, J_base, g, m0, gcode, gtarget, gttar,
           dkind, d0, jl0, jr0, rkind, w, c, closure, pert, stiff_limit, eps_empty,
           watch_lo, watch_hi, snap_steps, norm_tol):
    N = psi0.shape[0]
    n_rec = n_steps // stride + 2
    psi_rec = np.empty((n_rec, N), dtype=np.complex128)
    E_rec = np.empty((n_rec, N))
    diag_rec = np.empty((n_rec, NDIAG))
    n_snap = snap_steps.shape[0]
    snaps = np.empty((n_snap, N), dtype=np.complex128)
    snap_t = np.empty(n_snap)
    s = 0
    E = np.empty(N)
    J = np.empty(N - 1)
    diag = np.empty(NDIAG)
    scratch = np.empty(NDIAG)
    k1 = np.empty(N, dtype=np.complex128)
    k2 = np.empty(N, dtype=np.complex128)
    k3 = np.empty(N, dtype=np.complex128)
    k4 = np.empty(N, dtype=np.complex128)
    y = psi0.copy()
    r = 0
    status = COMPLETED
    where = -1
    i = 0
    det_sign = 0.0  # the determinant may not change sign along a trajectory
    # branch of the closed-form determinant, followed by continuity of the signed root
    branch = 0.0
    h1 = 0.0
    h2 = 0.0
    while True:
        t = t0 + i * dt
        # termination checks on the current state
        for k in range(watch_lo, watch_hi + 1):
            if y[k].real ** 2 + y[k].imag ** 2 < eps_empty:
                status = RESERVOIR_EMPTY
                where = k
                break
        if status != COMPLETED:
            break
        st = control_nb(t, y, E, J, E_base, J_base, g, m0, gcode, gtarget, gttar, dkind, d0,
                        jl0, jr0, rkind, w, c, closure, pert, diag)
        if st != COMPLETED:
            status = st
            break
        if det_sign == 0.0:
            det_sign = np.sign(diag[11])
        if diag[11] * det_sign <= 0.0:
            status = SINGULAR_DET
            break
        _finish_diag(y, J, diag[1], dkind, m0, diag)
        center = 0.5 * (diag[13] + diag[14])
        half = 0.5 * (diag[13] - diag[14])
        if i == 0:
            branch = 1.0 if abs(diag[13] - diag[11]) <= abs(diag[14] - diag[11]) else -1.0
        else:
            pred = h1 if i == 1 else 2.0 * h1 - h2
            branch = 1.0 if abs(half - pred) <= abs(-half - pred) else -1.0
        h2 = h1
        h1 = branch * half
        diag[22] = center + branch * half
        diag[23] = branch
        if diag[15] < 0.0:
            status = COMPLEX_BRANCH
            break
        if _emax(E) * dt > stiff_limit:
            status = STIFF
            break
        if i % stride == 0 or i == n_steps:
            psi_rec[r] = y
            E_rec[r] = E
            diag_rec[r] = diag
            r += 1
        while s < n_snap and snap_steps[s] == i:
            snaps[s] = y
            snap_t[s] = t
            s += 1
        if i == n_steps:
            break
        rhs_nb(y, E, J, g, k1)
        y2 = y + 0.5 * dt * k1
        st = control_nb(t + 0.5 * dt, y2, E, J, E_base, J_base, g, m0, gcode, gtarget, gttar,
                        dkind, d0, jl0, jr0, rkind, w, c, closure, pert, scratch)
        if st != COMPLETED:
            status = st
            break
        if scratch[11] * det_sign <= 0.0:
            status = SINGULAR_DET
            break
        if _emax(E) * dt > stiff_limit:
            status = STIFF
            break
        rhs_nb(y2, E, J, g, k2)
        y3 = y + 0.5 * dt * k2
        st = control_nb(t + 0.5 * dt, y3, E, J, E_base, J_base, g, m0, gcode, gtarget, gttar,
                        dkind, d0, jl0, jr0, rkind, w, c, closure, pert, scratch)
        if st != COMPLETED:
            status = st
            break
        if scratch[11] * det_sign <= 0.0:
            status = SINGULAR_DET
            break
        if _emax(E) * dt > stiff_limit:
            status = STIFF
            break
        rhs_nb(y3, E, J, g, k3)
        y4 = y + dt * k3
        st = control_nb(t + dt, y4, E, J, E_base, J_base, g, m0, gcode, gtarget, gttar,
                        dkind, d0, jl0, jr0, rkind, w, c, closure, pert, scratch)
        if st != COMPLETED:
            status = st
            break
        if scratch[11] * det_sign <= 0.0:
            status = SINGULAR_DET
            break
        if _emax(E) * dt > stiff_limit:
            status = STIFF
            break
        rhs_nb(y4, E, J, g, k4)
        ynew = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        finite = True
        for k in range(N):
            if not (np.isfinite(ynew[k].real) and np.isfinite(ynew[k].imag)):
                finite = False
        if not finite:
            status = BLOW_UP
            break
        # the chain is Hermitian, so any norm change is local RK4 error: the
        # control varies faster than the step resolves
        n_old = 0.0
        n_new = 0.0
        for k in range(N):
            n_old += y[k].real ** 2 + y[k].imag ** 2
            n_new += ynew[k].real ** 2 + ynew[k].imag ** 2
        if abs(n_new - n_old) > norm_tol * n_old:
            status = STIFF
            break
        y = ynew
        i += 1
    return psi_rec[:r], E_rec[:r], diag_rec[:r], status, where, i, snaps[:s], snap_t[:s]
