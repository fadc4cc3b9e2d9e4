"""Run orchestration: flat key=value configs, the time loop, and output files.

A run writes, inside its output directory:

* ``diagnostics.csv``  one row per step (written incrementally, so a failed
  run keeps everything up to the failing step): time, step sizes, the
  material/magneto-sonic ratio, the divergence norm, conserved totals,
  minimum pressure and linear-solver statistics,
* snapshots at the configured cadence plus ``final`` always, as CSV
  (17-significant-digit decimal, one interior cell per row, x fastest) or
  legacy VTK structured points,
* ``config.txt``  the resolved configuration (round-trips through the
  parser), and ``failure.txt`` when a step fails.

Outputs are deterministic for a fixed configuration on one platform.
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from . import diagnostics as diag
from . import operators as ops
from . import physics as phys
from .cases import CaseSpec, build_state, case_names, get_case
from .mesh import ConfigurationError, Grid
from .physics import AdmissibilityError, MhdState
from .stepper import ExplicitStepper, SemiImplicitStepper, StepFailure

OUTPUT_DIR_ENV = "SIMHD_OUTPUT_DIR"


@dataclass
class RunConfig:
    case: str = ""
    rho0: float | None = None
    a0: float | None = None
    mx: float | None = None
    nx: int | None = None
    ny: int | None = None
    nz: int | None = None
    cfl: float = 0.9
    order: int = 2
    limiter: str = "mc"
    gamma: float | None = None
    t_f: float | None = None
    max_steps: int = 0
    scheme: str = "semi-implicit"
    a_diss: float = 1.0
    gmres_tol: float = 1e-12
    gmres_restart: int = 40
    gmres_maxiter: int = 1000
    output_dir: str = "simhd-out"
    snapshot_format: str = "csv"
    output_every: int = 0
    output_times: tuple[float, ...] = ()

    def validate(self):
        if not self.case:
            raise ConfigurationError("config must set 'case'")
        if not (0.0 < self.cfl <= 1.0):
            raise ConfigurationError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.order not in (1, 2):
            raise ConfigurationError(f"order must be 1 or 2, got {self.order}")
        if self.limiter not in ("mc", "minmod"):
            raise ConfigurationError(f"limiter must be mc or minmod, got {self.limiter!r}")
        for key in ("nx", "ny", "nz"):
            val = getattr(self, key)
            if val is not None and val < 1:
                raise ConfigurationError(f"{key} must be >= 1, got {val}")
        if self.scheme not in ("semi-implicit", "explicit"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if self.snapshot_format not in ("csv", "vtk"):
            raise ConfigurationError(
                f"snapshot_format must be csv or vtk, got {self.snapshot_format!r}")
        if self.gamma is not None and not self.gamma > 1.0:
            raise ConfigurationError("gamma must exceed 1")
        return self


_PARSERS = {
    "case": str, "scheme": str, "output_dir": str, "snapshot_format": str,
    "limiter": str,
    "rho0": float, "a0": float, "mx": float, "cfl": float, "gamma": float,
    "t_f": float, "a_diss": float, "gmres_tol": float,
    "nx": int, "ny": int, "nz": int, "order": int, "max_steps": int,
    "gmres_restart": int, "gmres_maxiter": int, "output_every": int,
    "output_times": lambda s: tuple(float(x) for x in s.split(",") if x.strip()),
}


def parse_config(text: str) -> RunConfig:
    """Parse the flat key=value format ('#' comments, one key per line)."""
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        try:
            setattr(cfg, key, _PARSERS[key](value))
        except ValueError as exc:
            raise ConfigurationError(
                f"line {lineno}: cannot parse value for {key!r}: {exc}") from exc
    return cfg.validate()


def render_config(cfg: RunConfig) -> str:
    """Emit a config text that parses back to an equal RunConfig."""
    lines = []
    defaults = RunConfig()
    for f in dc_fields(RunConfig):
        val = getattr(cfg, f.name)
        if val == getattr(defaults, f.name) and f.name != "case":
            continue
        if f.name == "output_times":
            val = ",".join(repr(t) for t in val)
        lines.append(f"{f.name}={val}")
    return "\n".join(lines) + "\n"


def _resolve(cfg: RunConfig):
    params = {}
    for key in ("rho0", "a0", "mx"):
        if getattr(cfg, key) is not None:
            params[key] = getattr(cfg, key)
    case = get_case(cfg.case, **params)
    n = tuple(getattr(cfg, k) if getattr(cfg, k) is not None else case.default_n[i]
              for i, k in enumerate(("nx", "ny", "nz")))
    gamma = cfg.gamma if cfg.gamma is not None else case.gamma
    case.gamma = gamma
    t_f = cfg.t_f if cfg.t_f is not None else case.t_f
    grid = case.make_grid(n)
    return case, grid, gamma, t_f


def make_stepper(cfg: RunConfig, case: CaseSpec, grid: Grid, gamma: float, frozen):
    if cfg.scheme == "explicit":
        if case.mode != "field":
            raise ConfigurationError(
                "the explicit reference scheme runs field-carrying (1D) cases only")
        return ExplicitStepper(grid, case.bc, gamma, order=cfg.order,
                               limiter=cfg.limiter, frozen=frozen)
    return SemiImplicitStepper(grid, case.bc, gamma, order=cfg.order,
                               limiter=cfg.limiter, gmres_tol=cfg.gmres_tol,
                               gmres_restart=cfg.gmres_restart,
                               gmres_maxiter=cfg.gmres_maxiter, a_diss=cfg.a_diss,
                               frozen=frozen)


@dataclass
class RunResult:
    state: MhdState
    grid: Grid
    case: CaseSpec
    stepper: object
    t: float
    steps: int
    rows: list
    status: int = 0
    failure: str = ""


DIAG_COLUMNS = ("step", "t", "dt", "dt_material", "dt_magnetosonic", "dt_ratio",
                "divb_inf", "mass", "mom_x", "mom_y", "mom_z", "energy",
                "min_pressure", "gmres_magnetic_iters", "gmres_magnetic_residual",
                "gmres_energy_iters", "gmres_energy_residual")


def _diag_row(step, t, dt, stepper, state, grid, gamma, cfl):
    if isinstance(stepper, ExplicitStepper):
        dt_mat, dt_ms, ratio = math.inf, dt, 1.0
    else:
        sample = diag.dt_ratio(stepper, state, cfl, t)
        dt_mat, dt_ms, ratio = sample.dt_material, sample.dt_magnetosonic, sample.ratio
    divb = diag.divb_inf_norm(state, grid)
    mass, mom, energy = diag.conserved_totals(state, grid)
    ii = grid.interior
    B = ops.curl(grid, state.A) if state.carries_potential else state.B
    p = phys.pressure_from_conserved(state.rho[ii], state.mom[(slice(None),) + ii],
                                     state.rhoE[ii], B[(slice(None),) + ii], gamma)
    reports = {"magnetic": (0, 0.0), "energy": (0, 0.0)}
    for which, rep in getattr(stepper, "last_reports", []):
        it, res = reports[which]
        reports[which] = (max(it, rep.iterations), max(res, rep.residual))
    return (step, t, dt, dt_mat, dt_ms, ratio, divb, mass, *mom, energy,
            float(np.min(p)), reports["magnetic"][0], reports["magnetic"][1],
            reports["energy"][0], reports["energy"][1])


def run_simulation(cfg: RunConfig, on_step=None) -> RunResult:
    """Drive the time loop in memory; ``on_step(row, state)`` sees each step."""
    cfg.validate()
    case, grid, gamma, t_f = _resolve(cfg)
    state, frozen = build_state(case, grid, gamma)
    stepper = make_stepper(cfg, case, grid, gamma, frozen)
    t = 0.0
    step = 0
    rows = []
    failure = ""
    status = 0
    try:
        while t < t_f * (1.0 - 1e-14) and (cfg.max_steps == 0 or step < cfg.max_steps):
            if isinstance(stepper, ExplicitStepper):
                dt = stepper.compute_dt(state, cfg.cfl, t_remaining=t_f - t)
                state = stepper.step(state, dt)
            else:
                dt = stepper.compute_dt(state, cfg.cfl, step == 0, t_remaining=t_f - t)
                state = stepper.step_lsdirk2(state, dt) if cfg.order == 2 \
                    else stepper.step_first_order(state, dt)
            t += dt
            step += 1
            row = _diag_row(step, t, dt, stepper, state, grid, gamma, cfg.cfl)
            rows.append(row)
            if on_step is not None:
                on_step(row, state)
    except (StepFailure, AdmissibilityError) as exc:
        failure = f"step {step + 1} at t={t!r}: {exc}"
        status = 1
    return RunResult(state, grid, case, stepper, t, step, rows, status, failure)


def run(cfg: RunConfig) -> int:
    """File-writing entry point; returns the process exit status."""
    cfg.validate()
    out_dir = os.environ.get(OUTPUT_DIR_ENV, cfg.output_dir)
    case, grid, gamma, t_f = _resolve(cfg)  # fail before creating outputs
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.txt"), "w") as fh:
        fh.write(render_config(cfg))
    ext = cfg.snapshot_format
    snap_times = list(cfg.output_times) if cfg.output_times else list(case.snapshot_times)
    emitted = [False] * len(snap_times)

    diag_path = os.path.join(out_dir, "diagnostics.csv")
    diag_fh = open(diag_path, "w")
    diag_fh.write(",".join(DIAG_COLUMNS) + "\n")

    def on_step(row, state):
        diag_fh.write(",".join(_fmt(v) for v in row) + "\n")
        diag_fh.flush()
        step, t = row[0], row[1]
        if cfg.output_every and step % cfg.output_every == 0:
            write_snapshot(state, grid, gamma, ext,
                           os.path.join(out_dir, f"snap_{step:06d}.{ext}"))
        for i, ts in enumerate(snap_times):
            if not emitted[i] and t >= ts * (1.0 - 1e-12):
                emitted[i] = True
                write_snapshot(state, grid, gamma, ext,
                               os.path.join(out_dir, f"snap_t{ts:g}.{ext}"))

    try:
        result = run_simulation(cfg, on_step=on_step)
    finally:
        diag_fh.close()
    write_snapshot(result.state, grid, gamma, ext,
                   os.path.join(out_dir, f"final.{ext}"))
    if result.status != 0:
        with open(os.path.join(out_dir, "failure.txt"), "w") as fh:
            fh.write(result.failure + "\n")
        print(f"run failed: {result.failure}", file=sys.stderr)
    return result.status


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _snapshot_fields(state: MhdState, grid: Grid, gamma: float):
    ii = grid.interior
    B = ops.curl(grid, state.A) if state.carries_potential else state.B
    rho = state.rho[ii]
    mom = state.mom[(slice(None),) + ii]
    Bi = B[(slice(None),) + ii]
    p = phys.pressure_from_conserved(rho, mom, state.rhoE[ii], Bi, gamma)
    A = state.A[(slice(None),) + ii] if state.carries_potential \
        else np.zeros_like(Bi)
    return rho, mom / rho, p, Bi, A


def write_snapshot(state: MhdState, grid: Grid, gamma: float, fmt: str,
                   path: str):
    """Write one interior-cell snapshot; CSV or legacy VTK structured points."""
    try:
        if fmt == "csv":
            _write_csv(state, grid, gamma, path)
        elif fmt == "vtk":
            _write_vtk(state, grid, gamma, path)
        else:
            raise ConfigurationError(f"unknown snapshot format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write snapshot {path}: {exc}") from exc


def _write_csv(state, grid, gamma, path):
    rho, vel, p, B, A = _snapshot_fields(state, grid, gamma)
    xs = [grid.centers(ax)[grid.gw[ax]:grid.gw[ax] + grid.n[ax]] for ax in range(3)]
    with open(path, "w") as fh:
        fh.write("x,y,z,rho,u,v,w,p,Bx,By,Bz,Ax,Ay,Az\n")
        for k in range(grid.n[2]):
            for j in range(grid.n[1]):
                for i in range(grid.n[0]):
                    vals = (xs[0][i], xs[1][j], xs[2][k], rho[i, j, k],
                            vel[0][i, j, k], vel[1][i, j, k], vel[2][i, j, k],
                            p[i, j, k], B[0][i, j, k], B[1][i, j, k], B[2][i, j, k],
                            A[0][i, j, k], A[1][i, j, k], A[2][i, j, k])
                    fh.write(",".join(f"{v:.17g}" for v in vals) + "\n")


def _write_vtk(state, grid, gamma, path):
    rho, vel, p, B, A = _snapshot_fields(state, grid, gamma)
    origin = [grid.bounds[2 * ax] + 0.5 * grid.d[ax] for ax in range(3)]
    npts = grid.n[0] * grid.n[1] * grid.n[2]

    def flat(arr):  # VTK expects x varying fastest
        return arr.transpose(2, 1, 0).reshape(-1)

    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("cell-centered MHD snapshot\n")
        fh.write("ASCII\nDATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {grid.n[0]} {grid.n[1]} {grid.n[2]}\n")
        fh.write(f"ORIGIN {origin[0]:.17g} {origin[1]:.17g} {origin[2]:.17g}\n")
        fh.write(f"SPACING {grid.d[0]:.17g} {grid.d[1]:.17g} {grid.d[2]:.17g}\n")
        fh.write(f"POINT_DATA {npts}\n")
        for name, arr in (("rho", rho), ("p", p)):
            fh.write(f"SCALARS {name} double\nLOOKUP_TABLE default\n")
            fh.write("\n".join(f"{v:.17g}" for v in flat(arr)) + "\n")
        for name, arr in (("velocity", vel), ("B", B), ("A", A)):
            fh.write(f"VECTORS {name} double\n")
            comps = [flat(arr[d]) for d in range(3)]
            for i in range(npts):
                fh.write(f"{comps[0][i]:.17g} {comps[1][i]:.17g} {comps[2][i]:.17g}\n")


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(
        prog="simhd",
        description="Semi-implicit divergence-free finite volume solver for ideal MHD")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a configuration file")
    run_p.add_argument("config", help="path to a key=value configuration file")
    sub.add_parser("case-list", help="list available benchmark cases")
    args = parser.parse_args(argv)

    if args.command == "case-list":
        for name in case_names():
            print(name)
        return 0
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
        return run(cfg)
    except (ConfigurationError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
