"""Ready-made scenario configs (plain dicts in the JSON schema)."""
from __future__ import annotations

import math


def _compensating(j0: float = 1.0) -> dict:
    return {"kind": "compensating", "j_left0": j0, "j_right0": j0}


def four_well(reservoir: float = 10.0, embedded: float = 0.5, gauge: str = "constant",
              dt: float = 1e-4, t_end: float = 60.0, stride: int = 100) -> dict:
    """Four wells, leveled by construction, adiabatic ramp to 0.5 over 20."""
    if gauge == "constant":
        # J_{m-1,m}(0) = d0 C_{m,m+2}(0) = 1 for the real start
        d = {"kind": "constant", "d0": 1.0 / (2.0 * math.sqrt(embedded * reservoir))}
    else:
        d = _compensating()
    return {
        "version": 1, "name": f"four-well-{reservoir:g}", "n_wells": 4, "m": 2,
        "gamma": {"shape": "ramp", "target": 0.5, "t_target": 20.0},
        "d_strategy": d, "reservoir": {"kind": "level-out"},
        "initial_state": {"kind": "populations",
                          "populations": [reservoir, embedded, embedded, reservoir]},
        "integrator": {"dt": dt, "t_end": t_end}, "output": {"stride": stride},
    }


def six_well_leveled(reservoir: float = 20.0, embedded: float = 0.5, dt: float = 1e-4,
                     t_end: float = 80.0, stride: int = 100) -> dict:
    return {
        "version": 1, "name": "six-well-leveled", "n_wells": 6, "m": 3,
        "gamma": {"shape": "ramp", "target": 0.5, "t_target": 20.0},
        "d_strategy": _compensating(), "reservoir": {"kind": "level-out"},
        "initial_state": {"kind": "leveled-stationary", "embedded": embedded,
                          "reservoir_left": reservoir, "reservoir_right": reservoir},
        "integrator": {"dt": dt, "t_end": t_end}, "output": {"stride": stride},
    }


def six_well_proportional(dt: float = 1e-4, t_end: float = 60.0, stride: int = 100) -> dict:
    """Ground state at E = -5 on the outer wells, g = 1, ramp to 0.7 over 15."""
    return {
        "version": 1, "name": "six-well-proportional", "n_wells": 6, "m": 3,
        "interaction": 1.0,
        "gamma": {"shape": "ramp", "target": 0.7, "t_target": 15.0},
        "d_strategy": _compensating(), "reservoir": {"kind": "proportional-currents"},
        "initial_state": {"kind": "ground-state", "energies": [-5, -5, 0, 0, -5, -5],
                          "norm": 1.0},
        "integrator": {"dt": dt, "t_end": t_end}, "output": {"stride": stride},
    }


def ten_well_proportional(dt: float = 1e-4, t_end: float = 60.0, stride: int = 100) -> dict:
    """Ground state at E = -3 on the outer wells, g = 10, constant rate 0.6."""
    return {
        "version": 1, "name": "ten-well-proportional", "n_wells": 10, "m": 5,
        "interaction": 10.0,
        "gamma": {"shape": "constant", "value": 0.6},
        "d_strategy": _compensating(), "reservoir": {"kind": "proportional-currents"},
        "initial_state": {"kind": "ground-state",
                          "energies": [-3, -3, -3, -3, 0, 0, -3, -3, -3, -3], "norm": 1.0},
        "integrator": {"dt": dt, "t_end": t_end}, "output": {"stride": stride},
    }


def stark_lattice(n_wells: int = 300, m: int = 150, dt: float = 1e-4, t_end: float = 120.0,
                  stride: int = 1000, snapshots=(0.0, 20.0, 40.0, 50.0)) -> dict:
    """Gaussian packet on a lattice with a defect, Stark-extended reservoir energies."""
    return {
        "version": 1, "name": "stark-lattice", "n_wells": n_wells, "m": m,
        "gamma": {"shape": "ramp", "target": 0.3, "t_target": 40.0},
        "d_strategy": _compensating(), "reservoir": {"kind": "stark-lattice"},
        "initial_state": {"kind": "gaussian-packet", "n0": m + 0.5, "q0": 0.0, "dq": 0.017},
        "integrator": {"dt": dt, "t_end": t_end},
        "output": {"stride": stride, "snapshots": list(snapshots)},
    }


PRESETS = {
    "four-well": four_well,
    "four-well-20": lambda **kw: four_well(reservoir=20.0, **kw),
    "six-well-leveled": six_well_leveled,
    "six-well-proportional": six_well_proportional,
    "ten-well-proportional": ten_well_proportional,
    "stark-lattice": stark_lattice,
}
