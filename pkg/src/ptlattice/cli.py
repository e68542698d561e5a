"""Command-line entry point: ``ptlattice {run,ground-state,compare,spectrum,sweep}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .lattice import LatticeParameters
from .scenario import (ConfigError, ScenarioConfig, compare_embedded, export_csv,
                       export_momentum_csv, output_dir, run, set_path, write_summary, _fmt)
from .stationary import GroundStateNotConverged, GroundStateRequest, ground_state, stationarity_residual

log = logging.getLogger("ptlattice")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_BLOWUP = 3


def _load(args) -> ScenarioConfig:
    cfg = ScenarioConfig.load(args.config)
    log.info("loaded %s (%d wells, m=%d)", args.config, cfg.n_wells, cfg.m)
    over = {}
    if args.dt is not None:
        over["integrator.dt"] = args.dt
    if args.t_end is not None:
        over["integrator.t_end"] = args.t_end
    return cfg.with_overrides(**over) if over else cfg


def _exit_code(rec) -> int:
    return EXIT_BLOWUP if rec.termination == "blow-up" else EXIT_OK


def _describe(rec) -> str:
    s = rec.summary
    what = rec.termination + (f" ({rec.detail})" if rec.detail else "")
    if rec.well is not None:
        what += f" at well {rec.well}"
    return (f"{rec.config.name}: {what} at t = {rec.t_final:.6g} after {rec.steps} steps; "
            f"max |r1|,|r2|,|r4| = {s.get('max_abs_r1', float('nan')):.2e}, "
            f"{s.get('max_abs_r2', float('nan')):.2e}, {s.get('max_abs_r4', float('nan')):.2e}; "
            f"norm drift {s.get('max_norm_drift', float('nan')):.2e}")


def _write_run(rec, out: Path):
    export_csv(rec, out / f"{rec.config.name}.csv")
    if rec.snapshots.shape[0]:
        export_momentum_csv(rec.snapshot_times, rec.snapshots, out / f"{rec.config.name}_momentum.csv")
    write_summary(rec, out / f"{rec.config.name}_summary.json")


def cmd_run(args) -> int:
    cfg = _load(args)
    rec = run(cfg)
    out = output_dir(cfg, args.out)
    _write_run(rec, out)
    print(_describe(rec))
    print(f"wrote {out}")
    return _exit_code(rec)


def cmd_ground_state(args) -> int:
    cfg = _load(args)
    spec = cfg.initial_state
    if spec["kind"] != "ground-state":
        raise ConfigError("ground-state: initial_state.kind must be 'ground-state'")
    params = LatticeParameters(spec["energies"], cfg.tunneling, cfg.interaction)
    psi, mu = ground_state(GroundStateRequest(params, spec["norm"], spec["tolerance"]))
    _, res = stationarity_residual(psi, params)
    out = output_dir(cfg, args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{cfg.name}_ground_state.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(["k", "E_k", "n_k", "re_psi", "im_psi"])
        for k, (E, a) in enumerate(zip(params.energies, psi.amplitudes), start=1):
            wr.writerow([k, _fmt(E), _fmt(abs(a) ** 2), _fmt(a.real), _fmt(a.imag)])
    print(f"mu = {mu!r}, residual = {res:.3e}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args)
    rec = run(cfg)
    rep = compare_embedded(rec)
    out = output_dir(cfg, args.out)
    _write_run(rec, out)
    path = out / f"{cfg.name}_compare.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "max_deviation"])
        for t, d in zip(rep["times"], rep["deviation"]):
            wr.writerow([_fmt(t), _fmt(d)])
    print(_describe(rec))
    for key in ("max_dev_n_m", "max_dev_n_m1", "max_dev_jt", "max_dev_C", "max_deviation"):
        print(f"{key} = {rep[key]:.3e}")
    return _exit_code(rec)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"--times: {exc}") from exc


def cmd_spectrum(args) -> int:
    cfg = _load(args).with_overrides(**{"output.snapshots": _floats(args.times)})
    rec = run(cfg)
    out = output_dir(cfg, args.out)
    if not rec.snapshots.shape[0]:
        print(_describe(rec))
        print("no requested time was reached before termination", file=sys.stderr)
        return _exit_code(rec)
    path = export_momentum_csv(rec.snapshot_times, rec.snapshots, out / f"{cfg.name}_momentum.csv")
    missing = len(cfg.snapshots) - rec.snapshots.shape[0]
    print(_describe(rec))
    if missing:
        print(f"{missing} requested time(s) lie after termination", file=sys.stderr)
    print(f"wrote {path}")
    return _exit_code(rec)


def _sweep_one(task):
    data, out = task
    cfg = ScenarioConfig.from_dict(data)
    rec = run(cfg)
    _write_run(rec, Path(out))
    return cfg.name, rec.termination, rec.detail, rec.t_final, _describe(rec)


def cmd_sweep(args) -> int:
    base = _load(args)
    try:
        values = [json.loads(v) for v in args.values.split(",")]
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--values: {exc}") from exc
    root = output_dir(base, args.out)
    tasks = []
    for v in values:
        data = base.to_dict()
        set_path(data, args.param, v)
        data["name"] = f"{base.name}-{args.param}={v}"
        ScenarioConfig.from_dict(data)  # validate all points before starting
        tasks.append((data, str(root / data["name"])))
    code = EXIT_OK
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        for name, term, detail, t_final, text in pool.map(_sweep_one, tasks):
            print(text)
            if term == "blow-up":
                code = EXIT_BLOWUP
    print(f"wrote {root}")
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ptlattice", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="scenario JSON file")
        sp.add_argument("--dt", type=float, help="override integrator.dt")
        sp.add_argument("--t-end", type=float, help="override integrator.t_end")
        sp.add_argument("--out", help="output directory (default: output.dir or runs/<name>)")

    common(sub.add_parser("run", help="integrate a scenario and write CSV"))
    common(sub.add_parser("ground-state", help="solve the initial ground state"))
    common(sub.add_parser("compare", help="run and compare with the two-mode model"))
    sp = sub.add_parser("spectrum", help="momentum-space snapshots")
    common(sp)
    sp.add_argument("--times", required=True, help="comma-separated snapshot times")
    sp = sub.add_parser("sweep", help="run a parameter sweep in parallel")
    common(sp)
    sp.add_argument("--param", required=True, help="dotted config path, e.g. gamma.target")
    sp.add_argument("--values", required=True, help="comma-separated JSON values")
    sp.add_argument("--workers", type=int, default=None)
    return p


COMMANDS = {"run": cmd_run, "ground-state": cmd_ground_state, "compare": cmd_compare,
            "spectrum": cmd_spectrum, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GroundStateNotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
