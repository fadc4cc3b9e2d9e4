"""Error norms, convergence rates, divergence and conservation monitors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import operators as ops
from . import physics as phys
from .mesh import Grid
from .physics import MhdState


@dataclass(frozen=True)
class Norms:
    L1: float
    L2: float
    Linf: float


NormReport = dict  # variable name -> Norms


@dataclass(frozen=True)
class DtRatioSample:
    time: float
    dt_material: float
    dt_magnetosonic: float
    ratio: float


def divb_inf_norm(state: MhdState, grid: Grid) -> float:
    """Max interior |div B|, with B taken consistently from the potential.

    In potential mode the field entering the divergence is the discrete
    curl evaluated wherever its stencil fits (one layer into the ghosts),
    which is exactly the composition the structure-preserving identity
    holds for.
    """
    B = ops.curl(grid, state.A) if state.carries_potential else state.B
    div = ops.divergence(grid, B)
    return float(np.max(np.abs(div[grid.interior])))


def error_norms(state: MhdState, grid: Grid, exact: dict, gamma: float) -> NormReport:
    """Cell-volume-weighted L1/L2/Linf distances to an exact solution.

    ``exact`` maps variable names to interior-shaped arrays evaluated at
    cell centers; supported variables are rho, u, v, w, p, Bx, By, Bz, Ax,
    Ay, Az.
    """
    ii = grid.interior
    B = ops.curl(grid, state.A) if state.carries_potential else state.B
    fields = {
        "rho": lambda: state.rho[ii],
        "u": lambda: state.mom[0][ii] / state.rho[ii],
        "v": lambda: state.mom[1][ii] / state.rho[ii],
        "w": lambda: state.mom[2][ii] / state.rho[ii],
        "p": lambda: phys.pressure_from_conserved(
            state.rho[ii], state.mom[(slice(None),) + ii], state.rhoE[ii],
            B[(slice(None),) + ii], gamma),
        "Bx": lambda: B[0][ii], "By": lambda: B[1][ii], "Bz": lambda: B[2][ii],
    }
    if state.carries_potential:
        fields.update({"Ax": lambda: state.A[0][ii], "Ay": lambda: state.A[1][ii],
                       "Az": lambda: state.A[2][ii]})
    vol = grid.cell_volume
    report: NormReport = {}
    for name, target in exact.items():
        if name not in fields:
            raise KeyError(f"unsupported comparison variable {name!r}")
        err = np.abs(fields[name]() - target)
        report[name] = Norms(float(np.sum(err) * vol),
                             float(math.sqrt(np.sum(err * err) * vol)),
                             float(np.max(err)))
    return report


def eoc(errors, h) -> list[float | None]:
    """Experimental orders of convergence from matched error/size sequences.

    ``None`` marks an undefined rate (an exactly zero error on either side).
    """
    errors = [float(e) for e in errors]
    h = [float(x) for x in h]
    if len(errors) != len(h) or len(errors) < 2:
        raise ValueError("need matched sequences of length >= 2")
    if any(h[i] <= h[i + 1] for i in range(len(h) - 1)):
        raise ValueError("h must be strictly decreasing")
    rates: list[float | None] = []
    for k in range(len(errors) - 1):
        if errors[k] == 0.0 or errors[k + 1] == 0.0:
            rates.append(None)
        else:
            rates.append(math.log(errors[k] / errors[k + 1])
                         / math.log(h[k] / h[k + 1]))
    return rates


def conserved_totals(state: MhdState, grid: Grid):
    """(mass, momentum vector, energy): volume-weighted interior sums."""
    ii = grid.interior
    vol = grid.cell_volume
    mass = float(np.sum(state.rho[ii]) * vol)
    mom = tuple(float(np.sum(state.mom[d][ii]) * vol) for d in range(3))
    energy = float(np.sum(state.rhoE[ii]) * vol)
    return mass, mom, energy


def dt_ratio(stepper, state: MhdState, cfl: float, t: float = 0.0) -> DtRatioSample:
    """Material vs magneto-sonic step sizes under the same CFL rule.

    A flow at rest has an unbounded material step; the ratio is then
    reported as infinity.
    """
    rate_c, rate_ms = stepper.courant_rates(state)
    dt_ms = cfl / rate_ms if rate_ms > 0.0 else math.inf
    if rate_c <= 0.0:
        return DtRatioSample(t, math.inf, dt_ms, math.inf)
    dt_mat = cfl / rate_c
    return DtRatioSample(t, dt_mat, dt_ms, dt_mat / dt_ms)
