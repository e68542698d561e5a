"""Scenario configuration, the simulation loop, oracle comparison and CSV export."""
from __future__ import annotations

import copy
import csv
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from . import engine
from .control import (CLOSURE_EXACT, CLOSURE_SUBSTITUTED, DStrategy, InfeasibleInitialization,
                      choose_branch, gauge_nb, initialize_state, residuals_nb)
from .lattice import HBAR, LatticeParameters, LatticeWavefunction
from .reservoir import SPECIFIC, ReservoirStrategy
from .schedule import GammaSchedule
from .semiclassical import gaussian_packet, momentum_transform
from .stationary import GroundStateRequest, ground_state
from .twomode import integrate_nb as dimer_nb
from .twomode import trajectory_observables

SCHEMA_VERSION = 1
DEFAULT_STRIDE = 10


class ConfigError(ValueError):
    """Invalid scenario configuration."""


# --------------------------------------------------------------------------
# config parsing

_TOP = {"version", "name", "n_wells", "m", "tunneling", "interaction", "gamma", "d_strategy",
        "reservoir", "initial_state", "integrator", "output", "perturbation"}
_REQUIRED = {"version", "n_wells", "m", "gamma", "d_strategy", "reservoir", "initial_state",
             "integrator"}
_GAMMA = {"constant": {"shape", "value"}, "ramp": {"shape", "target", "t_target"}}
_DSTRAT = {"constant": ({"kind", "d0"}, {"kind", "d0"}),
           "compensating": ({"kind"}, {"kind", "j_left0", "j_right0"})}
_RESERVOIR = {"level-out": ({"kind"}, {"kind"}),
              "stark-lattice": ({"kind"}, {"kind"}),
              "proportional-currents": ({"kind"}, {"kind"}),
              "specific-currents": ({"kind", "weights"}, {"kind", "weights", "offsets"})}
_INITIAL = {"ground-state": ({"kind", "energies"}, {"kind", "energies", "norm", "tolerance"}),
            "populations": ({"kind", "populations"}, {"kind", "populations", "phases"}),
            "gaussian-packet": ({"kind", "n0", "dq"}, {"kind", "n0", "q0", "dq"}),
            "leveled-stationary": ({"kind", "embedded", "reservoir_left", "reservoir_right"},
                                   {"kind", "embedded", "reservoir_left", "reservoir_right"})}
_INTEGRATOR = ({"dt", "t_end"}, {"dt", "t_end", "stiff_limit", "norm_tolerance", "empty_threshold", "closure"})
_OUTPUT = {"dir", "stride", "snapshots"}
_PERTURB = {"J_left", "J_right", "E_left", "E_right"}


def _keys(d, required, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object, got {type(d).__name__}")
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise ConfigError(f"{where}: missing key(s) {sorted(missing)}")


def _real(x, where, positive=False) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {x!r}")
    x = float(x)
    if not math.isfinite(x):
        raise ConfigError(f"{where}: must be finite")
    if positive and not x > 0:
        raise ConfigError(f"{where}: must be positive, got {x}")
    return x


def _vector(x, size, where) -> np.ndarray:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return np.full(size, _real(x, where))
    if not isinstance(x, list) or len(x) != size:
        raise ConfigError(f"{where}: expected a number or a list of {size} numbers")
    return np.array([_real(v, f"{where}[{i}]") for i, v in enumerate(x)])


def _int(x, where) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(f"{where}: expected an integer, got {x!r}")
    return x


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario. Build with :meth:`from_dict` or :meth:`load`."""

    n_wells: int
    m: int
    tunneling: np.ndarray
    interaction: np.ndarray
    gamma: GammaSchedule
    d_strategy: DStrategy
    reservoir: ReservoirStrategy
    initial_state: dict
    dt: float
    t_end: float
    stiff_limit: float = 0.25
    norm_tolerance: float = 1e-13
    empty_threshold: float = 1e-9
    closure: int = CLOSURE_EXACT
    out_dir: str | None = None
    stride: int = DEFAULT_STRIDE
    snapshots: tuple = ()
    perturbation: tuple = (1.0, 1.0, 1.0, 1.0)
    name: str = "scenario"
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        _keys(data, _REQUIRED, _TOP, "config")
        if data["version"] != SCHEMA_VERSION:
            raise ConfigError(f"config: unsupported version {data['version']!r} "
                              f"(expected {SCHEMA_VERSION})")
        N = _int(data["n_wells"], "n_wells")
        m = _int(data["m"], "m")
        if N < 4:
            raise ConfigError(f"n_wells: need at least 4 wells, got {N}")
        if not (2 <= m and m + 2 <= N):
            raise ConfigError(f"m: need 2 <= m and m + 2 <= n_wells, got m={m}, n_wells={N}")
        J = _vector(data.get("tunneling", 1.0), N - 1, "tunneling")
        g = _vector(data.get("interaction", 0.0), N, "interaction")
        if g[m - 1] != g[m]:
            raise ConfigError(f"interaction: embedded wells need g_m = g_(m+1), "
                              f"got {g[m - 1]} and {g[m]}")

        gd = data["gamma"]
        shape = gd.get("shape") if isinstance(gd, dict) else None
        if shape not in _GAMMA:
            raise ConfigError(f"gamma.shape: expected one of {sorted(_GAMMA)}, got {shape!r}")
        _keys(gd, _GAMMA[shape], _GAMMA[shape], "gamma")
        if shape == "constant":
            sched = GammaSchedule.constant(_real(gd["value"], "gamma.value"))
        else:
            sched = GammaSchedule.ramp(_real(gd["target"], "gamma.target"),
                                       _real(gd["t_target"], "gamma.t_target", positive=True))

        dd = data["d_strategy"]
        kind = dd.get("kind") if isinstance(dd, dict) else None
        if kind not in _DSTRAT:
            raise ConfigError(f"d_strategy.kind: expected one of {sorted(_DSTRAT)}, got {kind!r}")
        _keys(dd, *_DSTRAT[kind], "d_strategy")
        if kind == "constant":
            d0 = _real(dd["d0"], "d_strategy.d0")
            if d0 == 0:
                raise ConfigError("d_strategy.d0: must be nonzero")
            dstrat = DStrategy.constant(d0)
        else:
            dstrat = DStrategy.compensating(_real(dd.get("j_left0", 1.0), "d_strategy.j_left0"),
                                            _real(dd.get("j_right0", 1.0), "d_strategy.j_right0"))

        rd = data["reservoir"]
        kind = rd.get("kind") if isinstance(rd, dict) else None
        if kind not in _RESERVOIR:
            raise ConfigError(f"reservoir.kind: expected one of {sorted(_RESERVOIR)}, got {kind!r}")
        _keys(rd, *_RESERVOIR[kind], "reservoir")
        if kind == "specific-currents":
            w = _vector(rd["weights"], N - 1, "reservoir.weights")
            c = _vector(rd.get("offsets", 0.0), N - 1, "reservoir.offsets")
            res = ReservoirStrategy.specific_currents(w, c)
        else:
            res = ReservoirStrategy(kind)  # proportional weights are resolved at run time

        init = _parse_initial(data["initial_state"], N, m, g, dstrat)

        it = data["integrator"]
        _keys(it, *_INTEGRATOR, "integrator")
        closure = it.get("closure", "exact")
        if closure not in ("exact", "substituted"):
            raise ConfigError(f"integrator.closure: expected 'exact' or 'substituted', got {closure!r}")

        out = data.get("output", {})
        _keys(out, set(), _OUTPUT, "output")
        stride = _int(out.get("stride", DEFAULT_STRIDE), "output.stride")
        if stride < 1:
            raise ConfigError("output.stride: must be >= 1")
        snaps = out.get("snapshots", [])
        if not isinstance(snaps, list):
            raise ConfigError("output.snapshots: expected a list of times")
        snaps = tuple(sorted(_real(s, "output.snapshots") for s in snaps))
        out_dir = out.get("dir")
        if out_dir is not None and not isinstance(out_dir, str):
            raise ConfigError("output.dir: expected a string")

        pd = data.get("perturbation", {})
        _keys(pd, set(), _PERTURB, "perturbation")
        pert = tuple(_real(pd.get(k, 1.0), f"perturbation.{k}")
                     for k in ("J_left", "J_right", "E_left", "E_right"))

        name = data.get("name", "scenario")
        if not isinstance(name, str):
            raise ConfigError("name: expected a string")

        return cls(n_wells=N, m=m, tunneling=J, interaction=g, gamma=sched, d_strategy=dstrat,
                   reservoir=res, initial_state=init,
                   dt=_real(it["dt"], "integrator.dt", positive=True),
                   t_end=_real(it["t_end"], "integrator.t_end", positive=True),
                   stiff_limit=_real(it.get("stiff_limit", 0.25), "integrator.stiff_limit", True),
                   norm_tolerance=_real(it.get("norm_tolerance", 1e-13),
                                        "integrator.norm_tolerance", True),
                   empty_threshold=_real(it.get("empty_threshold", 1e-9),
                                         "integrator.empty_threshold", True),
                   closure=CLOSURE_EXACT if closure == "exact" else CLOSURE_SUBSTITUTED,
                   out_dir=out_dir, stride=stride, snapshots=snaps, perturbation=pert, name=name,
                   raw=copy.deepcopy(data))

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)

    def with_overrides(self, **changes) -> "ScenarioConfig":
        """Re-validated copy; keys are dotted paths such as ``integrator.dt``."""
        data = self.to_dict()
        for path, value in changes.items():
            set_path(data, path, value)
        return ScenarioConfig.from_dict(data)

    @property
    def base_params(self) -> LatticeParameters:
        return LatticeParameters(np.zeros(self.n_wells), self.tunneling, self.interaction)


def set_path(data: dict, path: str, value) -> None:
    """Set ``a.b.c`` in a nested dict, creating intermediate objects."""
    keys = path.replace("__", ".").split(".")
    node = data
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"{path}: {k} is not an object")
    node[keys[-1]] = value


def _parse_initial(d, N, m, g, dstrat) -> dict:
    kind = d.get("kind") if isinstance(d, dict) else None
    if kind not in _INITIAL:
        raise ConfigError(f"initial_state.kind: expected one of {sorted(_INITIAL)}, got {kind!r}")
    _keys(d, *_INITIAL[kind], "initial_state")
    out = {"kind": kind}
    if kind == "ground-state":
        out["energies"] = _vector(d["energies"], N, "initial_state.energies")
        out["norm"] = _real(d.get("norm", 1.0), "initial_state.norm", positive=True)
        out["tolerance"] = _real(d.get("tolerance", 1e-12), "initial_state.tolerance", True)
    elif kind == "populations":
        n = _vector(d["populations"], N, "initial_state.populations")
        if np.any(n < 0):
            raise ConfigError("initial_state.populations: must be non-negative")
        out["populations"] = n
        out["phases"] = None if d.get("phases") is None else \
            _vector(d["phases"], N, "initial_state.phases")
    elif kind == "gaussian-packet":
        out["n0"] = _real(d["n0"], "initial_state.n0")
        out["q0"] = _real(d.get("q0", 0.0), "initial_state.q0")
        out["dq"] = _real(d["dq"], "initial_state.dq", positive=True)
    else:
        for k in ("embedded", "reservoir_left", "reservoir_right"):
            out[k] = _real(d[k], f"initial_state.{k}", positive=True)
        reservoir = np.r_[g[:m - 1], g[m + 1:]]
        if np.any(reservoir != 0):
            raise ConfigError("initial_state: leveled-stationary needs g = 0 in the reservoir wells")
    return out


# --------------------------------------------------------------------------
# initial states


def _chain_profile(x, J):
    """Real amplitudes u_0..u_K of -J u_{k-1} - J u_{k+1} = -x u_k with u_0 = 1.

    ``J`` holds the K links from the outer end inward; u_K is the amplitude of
    the embedded well.
    """
    u = np.empty(J.size + 1)
    u[0] = 1.0
    if J.size:
        u[1] = x * u[0] / J[0]
    for k in range(1, J.size):
        u[k + 1] = (x * u[k] - J[k - 1] * u[k - 1]) / J[k]
    return u


def _leveled_side(J, n_emb, total):
    """Populations of one reservoir side (outer to inner) in a leveled stationary state."""
    K = J.size
    if K == 1:
        return np.array([total])
    inner = J[:-1]
    # largest eigenvalue of the reservoir hopping matrix: u_K changes sign below it
    A = np.diag(inner, 1) + np.diag(inner, -1)
    lam = float(np.linalg.eigvalsh(A)[-1]) if A.size else 0.0

    def excess(logx):
        u = _chain_profile(lam + math.exp(logx), J)
        if not u[-1] > 0:
            return 1e3  # at or below the eigenvalue: reservoir share unbounded
        return math.log(n_emb * np.sum(u[:-1] ** 2) / u[-1] ** 2) - math.log(total)

    lo, hi = -40.0, 10.0
    while excess(hi) > 0:
        hi += 10.0
    logx = optimize.brentq(excess, lo, hi, xtol=1e-15, maxiter=500)
    u = _chain_profile(lam + math.exp(logx), J)
    return n_emb * u[:-1] ** 2 / u[-1] ** 2


def leveled_stationary_populations(cfg: ScenarioConfig) -> np.ndarray:
    """Populations of the real stationary state with leveled reservoir energies.

    The controlled tunnelings depend on the state itself, so the construction
    is iterated to a fixed point.
    """
    N, m0 = cfg.n_wells, cfg.m - 1
    spec = cfg.initial_state
    J = cfg.tunneling.copy()
    s = cfg.d_strategy
    n = np.full(N, spec["embedded"])
    for _ in range(200):
        left = _leveled_side(J[:m0], spec["embedded"], spec["reservoir_left"])
        right = _leveled_side(J[m0 + 1:][::-1], spec["embedded"], spec["reservoir_right"])[::-1]
        n = np.r_[left, spec["embedded"], spec["embedded"], right]
        Jn = cfg.tunneling.copy()
        psi = np.sqrt(n).astype(np.complex128)
        gauge_nb(psi, Jn, cfg.interaction, m0, s.code, s.d0, s.j_left0, s.j_right0)
        if abs(Jn[m0 - 1] - J[m0 - 1]) < 1e-15 and abs(Jn[m0 + 1] - J[m0 + 1]) < 1e-15:
            return n
        J = Jn
    raise ConfigError("initial_state: leveled-stationary construction did not converge")


def build_initial_state(cfg: ScenarioConfig) -> tuple[LatticeWavefunction, ReservoirStrategy, list]:
    """Initial amplitudes satisfying the current conditions, and the resolved reservoir strategy."""
    spec = cfg.initial_state
    kind = spec["kind"]
    notes = []
    G0, _ = cfg.gamma(0.0)
    if kind == "ground-state":
        params = LatticeParameters(spec["energies"], cfg.tunneling, cfg.interaction)
        psi, mu = ground_state(GroundStateRequest(params, spec["norm"], spec["tolerance"]))
        n = psi.populations
        notes.append(f"ground state mu = {mu!r}")
    elif kind == "populations":
        n = spec["populations"]
    elif kind == "gaussian-packet":
        packet = gaussian_packet(cfg.n_wells, spec["n0"], spec["q0"], spec["dq"])
        n = packet.populations
    else:
        n = leveled_stationary_populations(cfg)

    reservoir = cfg.reservoir
    if reservoir.kind == "proportional-currents":
        reservoir = ReservoirStrategy.proportional(n, cfg.m)

    if kind == "gaussian-packet":
        psi = packet
    elif kind == "populations" and spec["phases"] is not None:
        psi = LatticeWavefunction(np.sqrt(n) * np.exp(1j * spec["phases"]))
    else:
        targets = None
        if reservoir.code == SPECIFIC:
            targets = reservoir.targets(np.sqrt(n).astype(complex), G0, cfg.m)
        try:
            psi = initialize_state(n, G0, cfg.base_params, cfg.m, cfg.d_strategy, targets)
        except InfeasibleInitialization as exc:
            raise ConfigError(f"initial_state: {exc}") from exc
    _check_conditions(cfg, psi.amplitudes, G0)
    return psi, reservoir, notes


def _check_conditions(cfg, a, G0):
    m0 = cfg.m - 1
    J = cfg.tunneling.copy()
    s = cfg.d_strategy
    if gauge_nb(a, J, cfg.interaction, m0, s.code, s.d0, s.j_left0, s.j_right0)[4] != 0:
        raise ConfigError("initial_state: compensating gauge is singular for this state")
    r1, r2, _, _ = residuals_nb(a, J, G0, m0)
    scale = max(1.0, abs(2 * G0 * abs(a[m0]) ** 2))
    if abs(r1) > 1e-10 * scale or abs(r2) > 1e-10 * scale:
        raise ConfigError(f"initial_state: current conditions violated at t=0 "
                          f"(r1={r1:.3e}, r2={r2:.3e})")


# --------------------------------------------------------------------------
# run


TERMINATION = {
    engine.COMPLETED: ("completed", ""),
    engine.RESERVOIR_EMPTY: ("reservoir-empty", ""),
    engine.SINGULAR_DET: ("control-breakdown", "singular-determinant"),
    engine.COMPLEX_BRANCH: ("control-breakdown", "complex-branch"),
    engine.STIFF: ("control-breakdown", "energy-divergence"),
    engine.SINGULAR_GAUGE: ("control-breakdown", "singular-gauge"),
    engine.RESERVOIR_SINGULAR: ("control-breakdown", "reservoir-singular"),
    engine.BLOW_UP: ("blow-up", ""),
}


@dataclass
class RunRecord:
    """Sampled trajectory and control history of one scenario run."""

    config: ScenarioConfig
    times: np.ndarray
    psi: np.ndarray
    energies: np.ndarray
    diag: dict
    termination: str
    detail: str
    well: int | None
    t_final: float
    steps: int
    sign: int
    snapshot_times: np.ndarray
    snapshots: np.ndarray
    notes: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    @property
    def tunnelings(self) -> np.ndarray:
        """Per-sample J_{k,k+1} with the controlled links filled in."""
        m0 = self.config.m - 1
        J = np.tile(self.config.tunneling, (self.times.size, 1))
        J[:, m0 - 1] = self.diag["J_left"]
        J[:, m0 + 1] = self.diag["J_right"]
        return J

    @property
    def currents(self) -> np.ndarray:
        jt = -2.0 * np.imag(self.psi[:, :-1] * np.conj(self.psi[:, 1:]))
        return self.tunnelings * jt / HBAR

    @property
    def det_analytic(self) -> np.ndarray:
        return self.diag["det_analytic"]

    @property
    def norm(self) -> np.ndarray:
        return np.sum(self.populations, axis=1)

    @property
    def breakdown(self) -> bool:
        return self.termination == "control-breakdown"


def _watch_range(cfg, reservoir):
    if reservoir.code == SPECIFIC:
        return 0, cfg.n_wells - 1
    m0 = cfg.m - 1
    return m0 - 1, m0 + 2


def run(cfg: ScenarioConfig) -> RunRecord:
    """Integrate a scenario until t_end or the first termination condition."""
    psi0, reservoir, notes = build_initial_state(cfg)
    N, m0 = cfg.n_wells, cfg.m - 1
    w, c = reservoir.arrays(N)
    n_steps = int(round(cfg.t_end / cfg.dt))
    snap_steps = np.array([int(round(t / cfg.dt)) for t in cfg.snapshots], dtype=np.int64)
    lo, hi = _watch_range(cfg, reservoir)
    s = cfg.d_strategy
    psi_rec, E_rec, diag_rec, status, where, steps, snaps, snap_t = engine.run_nb(
        np.array(psi0.amplitudes), 0.0, cfg.dt, n_steps, cfg.stride, np.zeros(N),
        np.ascontiguousarray(cfg.tunneling), cfg.interaction, m0, cfg.gamma.code,
        cfg.gamma.target, cfg.gamma.t_target, s.code, s.d0, s.j_left0, s.j_right0,
        reservoir.code, w, c, cfg.closure, np.array(cfg.perturbation, dtype=float),
        cfg.stiff_limit, cfg.empty_threshold, lo, hi, snap_steps, cfg.norm_tolerance)
    term, detail = TERMINATION[status]
    diag = {name: diag_rec[:, i].copy() for i, name in enumerate(engine.DIAG)}
    sign = 0
    if diag_rec.shape[0]:
        sign = choose_branch(diag["det"][0], diag["det_plus"][0], diag["det_minus"][0])
    rec = RunRecord(config=cfg, times=diag["t"], psi=psi_rec, energies=E_rec, diag=diag,
                    termination=term, detail=detail, well=None if where < 0 else where + 1,
                    t_final=steps * cfg.dt, steps=int(steps), sign=sign,
                    snapshot_times=snap_t, snapshots=snaps, notes=notes)
    rec.summary = summarize(rec)
    return rec


def summarize(rec: RunRecord) -> dict:
    out = {"termination": rec.termination, "detail": rec.detail, "t_final": rec.t_final,
           "steps": rec.steps, "samples": int(rec.times.size), "branch": rec.sign}
    if rec.times.size:
        out["branch_switches"] = int(np.count_nonzero(np.diff(rec.diag["branch"])))
    if rec.well is not None:
        out["well"] = rec.well
    if rec.times.size:
        d = rec.diag
        for r in ("r1", "r2", "r3", "r4"):
            out[f"max_abs_{r}"] = float(np.max(np.abs(d[r])))
        norm = rec.norm
        out["max_norm_drift"] = float(np.max(np.abs(norm - norm[0])))
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.abs(rec.det_analytic - d["det"]) / np.abs(d["det"])
        out["max_det_rel_error"] = float(np.nanmax(rel)) if np.any(np.isfinite(rel)) else math.nan
    return out


# --------------------------------------------------------------------------
# two-mode oracle


def compare_embedded(rec: RunRecord) -> dict:
    """Deviation of the embedded wells from the complex two-mode model with the same schedule."""
    cfg = rec.config
    if rec.times.size == 0:
        raise ValueError("record holds no samples")
    m0 = cfg.m - 1
    p1, p2 = rec.psi[0, m0], rec.psi[0, m0 + 1]
    times, amps = dimer_nb(complex(p1), complex(p2), float(rec.times[0]), cfg.dt, rec.steps,
                           cfg.stride, cfg.gamma.code, cfg.gamma.target, cfg.gamma.t_target,
                           float(cfg.tunneling[m0]), float(cfg.interaction[m0]))
    idx = np.rint(rec.times / cfg.dt).astype(np.int64)
    keep = idx % cfg.stride == 0
    ref = trajectory_observables(amps[idx[keep] // cfg.stride])
    emb = trajectory_observables(rec.psi[keep][:, [m0, m0 + 1]])
    dev = np.abs(emb - ref)
    names = ("n_m", "n_m1", "jt", "C")
    report = {f"max_dev_{k}": float(dev[:, i].max()) for i, k in enumerate(names)}
    report["max_deviation"] = float(dev.max())
    report["times"] = rec.times[keep]
    report["deviation"] = dev.max(axis=1)
    rec.summary["max_oracle_deviation"] = report["max_deviation"]
    return report


# --------------------------------------------------------------------------
# CSV


def csv_header(n_wells: int) -> list[str]:
    return (["t"] + [f"n_{k}" for k in range(1, n_wells + 1)]
            + [f"j_{k}_{k + 1}" for k in range(1, n_wells)]
            + ["J_left", "J_right"] + [f"E_{k}" for k in range(1, n_wells + 1)]
            + ["Gamma", "d", "det"])


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def export_csv(rec: RunRecord, path) -> Path:
    path = Path(path)
    N = rec.config.n_wells
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(csv_header(N))
            if rec.times.size:
                n, j = rec.populations, rec.currents
                d = rec.diag
                for i in range(rec.times.size):
                    row = [rec.times[i], *n[i], *j[i], d["J_left"][i], d["J_right"][i],
                           *rec.energies[i], d["gamma"][i], d["d"][i], d["det"][i]]
                    wr.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(header))
    return header, data


def export_momentum_csv(times, states, path) -> Path:
    """One row per snapshot: t, then |psi~(q)|^2 on the q grid (grid values in the header)."""
    path = Path(path)
    states = [np.asarray(s) for s in states]
    if not states:
        raise ValueError("no snapshots to export")
    spectra = [momentum_transform(s) for s in states]
    q = spectra[0].q
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t"] + [_fmt(x) for x in q])
            for t, sp in zip(times, spectra):
                wr.writerow([_fmt(t)] + [_fmt(x) for x in sp.power])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def write_summary(rec: RunRecord, path) -> Path:
    path = Path(path)
    data = {"name": rec.config.name, "config": rec.config.to_dict(), "summary": rec.summary,
            "notes": rec.notes}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, default=float) + "\n", encoding="utf-8")
    return path


def output_dir(cfg: ScenarioConfig, override: str | None = None) -> Path:
    return Path(override or cfg.out_dir or os.path.join("runs", cfg.name))


def warn_if_nonstationary(rec: RunRecord) -> None:
    """Ground-state starts assume the controlled links keep their configured value at t=0."""
    cfg = rec.config
    if cfg.initial_state["kind"] != "ground-state" or not rec.times.size:
        return
    m0 = cfg.m - 1
    if abs(rec.diag["J_left"][0] - cfg.tunneling[m0 - 1]) > 1e-9 or \
            abs(rec.diag["J_right"][0] - cfg.tunneling[m0 + 1]) > 1e-9:
        warnings.warn("controlled tunnelings at t=0 differ from the ground-state tunnelings; "
                      "the start is not stationary", RuntimeWarning)
