"""Gain/loss schedules Gamma(t) shared by the controller and the two-mode reference."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

CONSTANT = 0
RAMP = 1


@dataclass(frozen=True)
class GammaSchedule:
    """Either a constant rate or the cosine-shaped adiabatic current ramp.

    For the ramp, ``target`` is reached at ``t_target`` and held afterwards.
    """

    shape: str = "constant"
    target: float = 0.0
    t_target: float = 1.0

    def __post_init__(self):
        if self.shape not in ("constant", "ramp"):
            raise ValueError(f"unknown schedule shape {self.shape!r}")
        if self.shape == "ramp" and not self.t_target > 0:
            raise ValueError("ramp needs t_target > 0")

    @classmethod
    def constant(cls, value: float) -> "GammaSchedule":
        return cls("constant", float(value), 1.0)

    @classmethod
    def ramp(cls, target: float, t_target: float) -> "GammaSchedule":
        return cls("ramp", float(target), float(t_target))

    @property
    def code(self) -> int:
        return RAMP if self.shape == "ramp" else CONSTANT

    def __call__(self, t: float) -> tuple[float, float]:
        return gamma_nb(float(t), self.code, self.target, self.t_target)

    def to_dict(self) -> dict:
        if self.shape == "constant":
            return {"shape": "constant", "value": self.target}
        return {"shape": "ramp", "target": self.target, "t_target": self.t_target}


def gamma(t: float, sched: GammaSchedule) -> tuple[float, float]:
    """(Gamma, dGamma/dt) at time t; the derivative is analytic."""
    return sched(t)


@njit(cache=True)
def gamma_nb(t, code, target, t_target):
    if code == CONSTANT:
        return target, 0.0
    if t < 0.0:
        return 0.0, 0.0
    if t > t_target:
        return target, 0.0
    x = np.pi * t / t_target
    return 0.5 * target * (1.0 - np.cos(x)), 0.5 * target * np.pi * np.sin(x) / t_target
