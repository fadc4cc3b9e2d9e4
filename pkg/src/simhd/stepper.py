"""Semi-implicit time integration for ideal MHD.

One time step proceeds in a fixed pipeline: an explicit Rusanov update of
density and momentum (material waves only), an implicit linear solve for
the magnetic unknowns (vector potential in multi-D, transverse field in
1D), accumulation of the magnetic fluxes into momentum and energy with
dissipation-free central differences, an implicit scalar solve for the
total energy, and a final momentum correction by the central difference of
the new energy.  Both linear systems arise from freezing one factor of each
nonlinear product at the old time level, so a single matrix-free GMRES
solve per system suffices.

Second order in time comes from a two-stage, stiffly accurate IMEX
Runge-Kutta wrapper whose every stage is exactly one such pipeline with a
scaled implicit step; the stability limit is set by the material speed
alone, with an additional magneto-sonic bound on the very first step to
cope with zero-velocity initial data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from . import physics as phys
from .linalg import LinearOperator, SolveReport, affine_to_linear, gmres_solve
from .mesh import (PERIODIC, BoundaryCondition, Grid, extrapolate_potential_ghosts,
                   fill_ghosts)
from .physics import FOUR_PI, EIGHT_PI, AdmissibilityError, MhdState

ALPHA_LSDIRK2 = 1.0 - 1.0 / math.sqrt(2.0)


class StepFailure(RuntimeError):
    """An implicit solve did not converge; carries the offending report."""

    def __init__(self, which: str, report: SolveReport):
        super().__init__(f"{which} solve failed: residual {report.residual:.3e} "
                         f"after {report.iterations} iterations (tol {report.tol:.1e})")
        self.which = which
        self.report = report


@dataclass(frozen=True)
class ImexTableau:
    """Double Butcher tableau for the semi-implicit IMEX stages."""

    a_exp: np.ndarray
    a_imp: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a_exp = np.asarray(self.a_exp, dtype=float)
        a_imp = np.asarray(self.a_imp, dtype=float)
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "a_exp", a_exp)
        object.__setattr__(self, "a_imp", a_imp)
        object.__setattr__(self, "b", b)
        s = b.shape[0]
        if a_exp.shape != (s, s) or a_imp.shape != (s, s):
            raise ValueError("tableau matrices must be s x s")
        if np.any(np.triu(a_exp) != 0.0):
            raise ValueError("explicit matrix must be strictly lower triangular")
        diag = np.diag(a_imp)
        if not (np.all(diag > 0.0) and np.allclose(diag, diag[0])):
            raise ValueError("implicit diagonal must be constant and positive")
        if not np.allclose(a_imp[-1], b):
            raise ValueError("tableau is not stiffly accurate")

    @property
    def stages(self) -> int:
        return self.b.shape[0]


def lsdirk2_tableau() -> ImexTableau:
    a = ALPHA_LSDIRK2
    ct = 1.0 / (2.0 * a)
    return ImexTableau(a_exp=[[0.0, 0.0], [ct, 0.0]],
                       a_imp=[[a, 0.0], [1.0 - a, a]],
                       b=[1.0 - a, a])


def euler_tableau() -> ImexTableau:
    """Forward/backward Euler pair; one stage of the pipeline per step."""
    return ImexTableau(a_exp=[[0.0]], a_imp=[[1.0]], b=[1.0])


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


@dataclass
class SemiImplicitStepper:
    """Owns the grid, boundary policy and solver knobs for one run."""

    grid: Grid
    bc: BoundaryCondition
    gamma: float
    order: int = 2
    limiter: str = "mc"
    gmres_tol: float = 1e-12
    gmres_restart: int = 40
    gmres_maxiter: int = 1000
    a_diss: float = 1.0
    frozen: dict = field(default_factory=dict)
    last_reports: list = field(default_factory=list)

    # ------------------------------------------------------------------ setup

    def fill_state(self, state: MhdState) -> MhdState:
        """Refresh every ghost layer of ``state`` in place."""
        g, bc = self.grid, self.bc
        fill_ghosts(state.rho, g, bc, self.frozen.get("rho"))
        fill_ghosts(state.mom, g, bc, self.frozen.get("mom"))
        fill_ghosts(state.rhoE, g, bc, self.frozen.get("rhoE"))
        if state.carries_potential:
            extrapolate_potential_ghosts(state.A, g)
        else:
            fill_ghosts(state.B, g, bc, self.frozen.get("B"))
        return state

    def magnetic_field(self, state: MhdState) -> np.ndarray:
        """Cell-centered B with boundary-policy ghosts.

        In potential mode the interior comes from the discrete curl; the
        ghost layers then follow the same policy as every other field so
        that flux sums telescope exactly on periodic domains.
        """
        if not state.carries_potential:
            return state.B
        B = ops.curl(self.grid, state.A)
        return fill_ghosts(B, self.grid, self.bc, self.frozen.get("B"))

    def _periodic_all(self) -> bool:
        return all(self.bc.kind(ax, s) == PERIODIC
                   for ax in self.grid.active_axes for s in (0, 1))

    # ------------------------------------------------------------- time steps

    def courant_rates(self, state: MhdState):
        """(material, magneto-sonic) Courant rates, 1/time.

        Each is the per-direction maximum signal speed divided by the cell
        size, summed over active directions; the sum is what bounds the
        unsplit explicit update, and using the same combination for both
        rates makes their ratio a pure wave-speed comparison.
        """
        g = self.grid
        ii = g.interior
        rho = state.rho[ii]
        mom = state.mom[(slice(None),) + ii]
        B = self.magnetic_field(state)[(slice(None),) + ii]
        p = phys.pressure_from_conserved(rho, mom, state.rhoE[ii], B, self.gamma)
        rate_c, rate_ms = 0.0, 0.0
        for ax in g.active_axes:
            un = np.abs(mom[ax] / rho)
            cf = phys.fast_speed(rho, p, B, ax, self.gamma)
            rate_c += float(np.max(un)) / g.d[ax]
            rate_ms += float(np.max(un + cf)) / g.d[ax]
        return rate_c, rate_ms

    def compute_dt(self, state: MhdState, cfl: float, is_first_step: bool,
                   t_remaining: float = math.inf) -> float:
        """Material CFL step, magneto-sonic bounded on the first step.

        A zero material speed on a later step falls back to the
        magneto-sonic bound rather than producing an unbounded step; the
        result is clipped so the run lands exactly on the final time.
        """
        if not (0.0 < cfl <= 1.0):
            raise ValueError("cfl must lie in (0, 1]")
        rate_c, rate_ms = self.courant_rates(state)
        dt_mat = cfl / rate_c if rate_c > 0.0 else math.inf
        dt_ms = cfl / rate_ms if rate_ms > 0.0 else math.inf
        dt = min(dt_mat, dt_ms) if (is_first_step or not math.isfinite(dt_mat)) \
            else dt_mat
        return min(dt, t_remaining)

    def step_first_order(self, state: MhdState, dt: float) -> MhdState:
        return self.step_imex(state, dt, euler_tableau())

    def step_lsdirk2(self, state: MhdState, dt: float) -> MhdState:
        return self.step_imex(state, dt, lsdirk2_tableau())

    def step_imex(self, state: MhdState, dt: float, tableau: ImexTableau) -> MhdState:
        """Advance one step; the result is the last stage (stiffly accurate)."""
        self.last_reports = []
        self.fill_state(state)
        increments: list[MhdState] = []
        stage = state
        for i in range(tableau.stages):
            q_exp = phys.state_combination(state, increments, dt * tableau.a_exp[i, :i])
            q_imp = phys.state_combination(state, increments, dt * tableau.a_imp[i, :i])
            dt_i = dt * tableau.a_imp[i, i]
            stage = self.stage_solve(q_exp, q_imp, dt_i)
            increments.append(MhdState(
                (stage.rho - q_imp.rho) / dt_i,
                (stage.mom - q_imp.mom) / dt_i,
                (stage.rhoE - q_imp.rhoE) / dt_i,
                A=(stage.A - q_imp.A) / dt_i if state.carries_potential else None,
                B=(stage.B - q_imp.B) / dt_i if not state.carries_potential else None))
        return stage

    # ---------------------------------------------------------- one SI stage

    def stage_solve(self, q_exp: MhdState, q_imp: MhdState, dt: float) -> MhdState:
        """One full semi-implicit solve with frozen coefficients from ``q_exp``.

        ``q_imp`` supplies the states being incremented.  With both equal to
        the time-level state and ``dt`` the full step this is the
        first-order scheme.
        """
        g = self.grid
        self.fill_state(q_exp)
        B_E = self.magnetic_field(q_exp)
        v_E = q_exp.mom / q_exp.rho
        p_E = phys.pressure_from_conserved(q_exp.rho, q_exp.mom, q_exp.rhoE,
                                           B_E, self.gamma)

        rho_s, mom_star = self.explicit_convective_step(q_exp, q_imp, dt, v_E)

        if q_exp.carries_potential:
            A_new, rep = self.solve_magnetic_potential(
                q_exp, q_imp, dt, rho_s, mom_star, B_E, v_E, p_E)
            B_new = ops.curl(g, A_new)
            fill_ghosts(B_new, g, self.bc, self.frozen.get("B"))
        else:
            B_new, rep = self.magnetic_update_1d(
                q_exp, q_imp, dt, rho_s, mom_star, B_E, p_E)
        self.last_reports.append(("magnetic", rep))
        if not rep.converged:
            raise StepFailure("magnetic", rep)

        mom_ss, rhoE_ss = self.add_magnetic_fluxes(
            q_exp, q_imp, dt, mom_star, B_new, v_E)

        h = (q_exp.rhoE + p_E) / rho_s
        rhoE_new, rep = self.solve_energy(dt, h, rhoE_ss, mom_ss)
        self.last_reports.append(("energy", rep))
        if not rep.converged:
            raise StepFailure("energy", rep)
        fill_ghosts(rhoE_new, g, self.bc, self.frozen.get("rhoE"))

        mom_new = self.update_momentum(dt, mom_ss, rhoE_new)
        fill_ghosts(mom_new, g, self.bc, self.frozen.get("mom"))

        if q_exp.carries_potential:
            return MhdState(rho_s, mom_new, rhoE_new, A=A_new)
        return MhdState(rho_s, mom_new, rhoE_new, B=B_new)

    def explicit_convective_step(self, q_exp: MhdState, q_imp: MhdState,
                                 dt: float, v_E: np.ndarray):
        """Rusanov update of density and momentum from the convective fluxes.

        The density result is final for the step; energy and magnetic data
        are untouched by construction of the splitting.
        """
        g = self.grid
        vel = {ax: v_E[ax] for ax in g.active_axes}
        rho_s = q_imp.rho - dt * ops.rusanov_divergence(
            g, q_exp.rho, {ax: q_exp.mom[ax] for ax in g.active_axes}, vel,
            self.order, self.limiter)
        mom_star = np.empty_like(q_imp.mom)
        for i in range(3):
            mom_star[i] = q_imp.mom[i] - dt * ops.rusanov_divergence(
                g, q_exp.mom[i], {ax: q_exp.mom[i] * v_E[ax] for ax in g.active_axes},
                vel, self.order, self.limiter)
        ii = g.interior
        if np.any(rho_s[ii] <= 0.0):
            idx = np.unravel_index(int(np.argmin(rho_s[ii])), rho_s[ii].shape)
            raise AdmissibilityError(
                f"non-positive density {rho_s[ii][idx]:.3e} at interior cell {idx}")
        fill_ghosts(rho_s, g, self.bc, self.frozen.get("rho"))
        fill_ghosts(mom_star, g, self.bc, self.frozen.get("mom"))
        return rho_s, mom_star

    def _lambda_b_kappas(self, q_exp: MhdState, v_E, B_E):
        """Per-axis dissipation coefficients lambda_b * dx for the A solve."""
        kap = []
        for ax in range(3):
            if self.grid.active(ax):
                lam = phys.magnetic_subsystem_speed(q_exp.rho, v_E[ax], B_E)
                kap.append(lam * self.grid.d[ax])
            else:
                kap.append(None)
        return kap

    def solve_magnetic_potential(self, q_exp, q_imp, dt, rho_s, mom_star,
                                 B_E, v_E, p_E):
        """Implicit vector-potential solve.

        The linearized magnetic stress is assembled from the frozen field
        and the curl of the unknown potential; eliminating the provisional
        momentum yields one linear system per step, closed by linear
        extrapolation ghosts for the potential (a homogeneous linear map,
        so the operator needs no affine correction).  An implicit
        second-difference damping with the magnetic sub-system speed as
        coefficient stabilizes the potential transport across shocks.
        """
        g = self.grid
        ii = g.interior
        vii = (slice(None),) + ii
        kap = self._lambda_b_kappas(q_exp, v_E, B_E)

        mom_eff = mom_star - dt * ops.gradient(g, p_E)
        rhs_full = q_imp.A - dt * cross(B_E, mom_eff / rho_s)
        b = rhs_full[vii].ravel()
        n = b.shape[0]
        shape3 = (3,) + g.shape
        dt2 = dt * dt
        diss = self.a_diss * dt2

        def apply_op(x):
            Ac = np.zeros(shape3)
            Ac[vii] = x.reshape((3,) + tuple(g.n))
            extrapolate_potential_ghosts(Ac, g)
            C = ops.curl(g, Ac)
            s = (B_E[0] * C[0] + B_E[1] * C[1] + B_E[2] * C[2]) / EIGHT_PI
            W = np.empty(shape3)
            for i in range(3):
                W[i] = ops.gradient_axis(g, s, i) \
                    - ops.divergence(g, B_E * C[i]) / FOUR_PI
            M = cross(B_E, W / rho_s)
            out = Ac - dt2 * M
            if diss != 0.0:
                for c in range(3):
                    out[c] -= diss * ops.laplacian(g, kap, Ac[c])
            return out[vii].ravel()

        op = LinearOperator(n, apply_op)
        x0 = q_imp.A[vii].ravel()
        x, rep = gmres_solve(op, b, x0=x0, tol=self.gmres_tol,
                             restart=self.gmres_restart, maxiter=self.gmres_maxiter)
        A_new = np.zeros(shape3)
        A_new[vii] = x.reshape((3,) + tuple(g.n))
        extrapolate_potential_ghosts(A_new, g)
        return A_new, rep

    def magnetic_update_1d(self, q_exp, q_imp, dt, rho_s, mom_star, B_E, p_E):
        """Implicit transverse-field solve for genuinely 1D runs.

        The normal field component is constant; the two transverse
        components couple through the linearized magnetic pressure and
        tension into a 2-component elliptic system solved on the stacked
        unknown vector.
        """
        g = self.grid
        if g.active_axes != (0,):
            raise ValueError("field-based magnetic update requires a 1D run along x")
        ii = g.interior
        ax = 0
        Bx = q_exp.B[0]
        cy = B_E[1] / rho_s
        cz = B_E[2] / rho_s
        cB = Bx / rho_s
        nx = int(np.prod(g.n))
        dt2 = dt * dt

        grad_in = ops.gradient_axis(g, p_E - Bx * Bx / EIGHT_PI, ax)
        momx_eff = mom_star[0] - dt * grad_in
        Fy = cy * momx_eff - cB * mom_star[1]
        Fz = cz * momx_eff - cB * mom_star[2]
        by_star = q_imp.B[1] - dt * ops.central_divergence(g, {ax: Fy})
        bz_star = q_imp.B[2] - dt * ops.central_divergence(g, {ax: Fz})
        b = np.concatenate([by_star[ii].ravel(), bz_star[ii].ravel()])

        frozen_B = self.frozen.get("B")

        def apply_affine(x):
            By = np.zeros(g.shape)
            Bz = np.zeros(g.shape)
            By[ii] = x[:nx].reshape(g.n)
            Bz[ii] = x[nx:].reshape(g.n)
            fill_ghosts(By, g, self.bc, None if frozen_B is None else frozen_B[1])
            fill_ghosts(Bz, g, self.bc, None if frozen_B is None else frozen_B[2])
            S = (B_E[1] * By + B_E[2] * Bz) / EIGHT_PI
            out_y = By - dt2 * (ops.second_difference_axis(g, cy, S, ax)
                                + ops.second_difference_axis(g, cB, Bx * By / FOUR_PI, ax))
            out_z = Bz - dt2 * (ops.second_difference_axis(g, cz, S, ax)
                                + ops.second_difference_axis(g, cB, Bx * Bz / FOUR_PI, ax))
            return np.concatenate([out_y[ii].ravel(), out_z[ii].ravel()])

        op, b_eff = affine_to_linear(apply_affine, 2 * nx, b)
        x0 = np.concatenate([q_imp.B[1][ii].ravel(), q_imp.B[2][ii].ravel()])
        x, rep = gmres_solve(op, b_eff, x0=x0, tol=self.gmres_tol,
                             restart=self.gmres_restart, maxiter=self.gmres_maxiter)
        B_new = q_imp.B.copy()
        B_new[0] = q_imp.B[0]
        B_new[1][ii] = x[:nx].reshape(g.n)
        B_new[2][ii] = x[nx:].reshape(g.n)
        fill_ghosts(B_new, g, self.bc, frozen_B)
        return B_new, rep

    def add_magnetic_fluxes(self, q_exp, q_imp, dt, mom_star, B_new, v_E):
        """Central-difference magnetic fluxes into momentum and energy.

        The diagonal momentum flux carries the pressure-elimination terms
        (2-gamma) times the new magnetic pressure minus (gamma-1) times the
        old kinetic energy density; the energy rows advect the new magnetic
        pressure with the old velocity and subtract the Poynting-like
        transport term.
        """
        g = self.grid
        m_new = phys.magnetic_energy_density(B_new)
        rk_E = phys.kinetic_energy_density(q_exp.rho, q_exp.mom)
        diag = (2.0 - self.gamma) * m_new - (self.gamma - 1.0) * rk_E
        vdotB = v_E[0] * B_new[0] + v_E[1] * B_new[1] + v_E[2] * B_new[2]

        mom_ss = np.empty_like(mom_star)
        for i in range(3):
            fluxes = {}
            for ax in g.active_axes:
                f = -B_new[i] * B_new[ax] / FOUR_PI
                if ax == i:
                    f = f + diag
                fluxes[ax] = f
            mom_ss[i] = mom_star[i] - dt * ops.central_divergence(g, fluxes)
        efluxes = {ax: v_E[ax] * m_new - B_new[ax] * vdotB / FOUR_PI
                   for ax in g.active_axes}
        rhoE_ss = q_imp.rhoE - dt * ops.central_divergence(g, efluxes)
        fill_ghosts(mom_ss, g, self.bc, self.frozen.get("mom"))
        return mom_ss, rhoE_ss

    def solve_energy(self, dt, h, rhoE_ss, mom_ss):
        """Implicit scalar energy solve.

        The operator is the identity minus (gamma-1) dt^2 times the
        conservative second difference with the enthalpy-like coefficient;
        on fully periodic grids a constant-coefficient spectral inverse
        preconditions the iteration, which matters in the low-Mach regime
        where the system becomes strongly stiff.
        """
        g = self.grid
        ii = g.interior
        coef = (self.gamma - 1.0) * dt * dt
        bss = rhoE_ss - dt * ops.central_divergence(
            g, {ax: h * mom_ss[ax] for ax in g.active_axes})
        b = bss[ii].ravel()
        n = b.shape[0]
        frozen_E = self.frozen.get("rhoE")

        def apply_affine(x):
            arr = np.zeros(g.shape)
            arr[ii] = x.reshape(g.n)
            fill_ghosts(arr, g, self.bc, frozen_E)
            out = arr - coef * ops.second_difference(g, h, arr)
            return out[ii].ravel()

        op, b_eff = affine_to_linear(apply_affine, n, b)
        precond = None
        if self._periodic_all() and coef > 0.0:
            precond = _spectral_helmholtz_inverse(g, coef * float(np.mean(h[ii])))
        x, rep = gmres_solve(op, b_eff, x0=b.copy(), tol=self.gmres_tol,
                             restart=self.gmres_restart, maxiter=self.gmres_maxiter,
                             precond=precond)
        rhoE_new = np.zeros(g.shape)
        rhoE_new[ii] = x.reshape(g.n)
        return rhoE_new, rep

    def update_momentum(self, dt, mom_ss, rhoE_new):
        """Finalize momentum with the central difference of the new energy."""
        g = self.grid
        mom_new = np.empty_like(mom_ss)
        for i in range(3):
            if g.active(i):
                mom_new[i] = mom_ss[i] - (self.gamma - 1.0) * dt * \
                    ops.central_divergence(g, {i: rhoE_new})
            else:
                mom_new[i] = mom_ss[i].copy()
        return mom_new


def _spectral_helmholtz_inverse(grid: Grid, c: float):
    """Exact inverse of I - c * Laplacian(const) on a periodic grid via FFT."""
    n = tuple(grid.n)
    shaped = []
    for ax in range(3):
        if grid.active(ax):
            k = np.arange(n[ax])
            lam = 4.0 * np.sin(np.pi * k / n[ax]) ** 2 / grid.d[ax] ** 2
        else:
            lam = np.zeros(n[ax])
        shape = [1, 1, 1]
        shape[ax] = n[ax]
        shaped.append(lam.reshape(shape))
    sym = 1.0 + c * (shaped[0] + shaped[1] + shaped[2])
    sym_r = np.ascontiguousarray(sym[:, :, : n[2] // 2 + 1])

    def precond(x):
        xhat = np.fft.rfftn(x.reshape(n))
        return np.fft.irfftn(xhat / sym_r, s=n).ravel()

    return precond


@dataclass
class ExplicitStepper:
    """Fully explicit Rusanov reference scheme on the unsplit flux.

    Used as the fine-grid oracle for the 1D benchmark comparisons and
    available as a run mode; the time step obeys the magneto-sonic CFL
    restriction.
    """

    grid: Grid
    bc: BoundaryCondition
    gamma: float
    order: int = 2
    limiter: str = "mc"
    frozen: dict = field(default_factory=dict)

    def fill_state(self, state: MhdState) -> MhdState:
        g, bc = self.grid, self.bc
        fill_ghosts(state.rho, g, bc, self.frozen.get("rho"))
        fill_ghosts(state.mom, g, bc, self.frozen.get("mom"))
        fill_ghosts(state.rhoE, g, bc, self.frozen.get("rhoE"))
        fill_ghosts(state.B, g, bc, self.frozen.get("B"))
        return state

    def compute_dt(self, state: MhdState, cfl: float, t_remaining=math.inf) -> float:
        g = self.grid
        ii = g.interior
        rho = state.rho[ii]
        mom = state.mom[(slice(None),) + ii]
        B = state.B[(slice(None),) + ii]
        p = phys.pressure_from_conserved(rho, mom, state.rhoE[ii], B, self.gamma)
        rate = 0.0
        for ax in g.active_axes:
            cf = phys.fast_speed(rho, p, B, ax, self.gamma)
            rate += float(np.max(np.abs(mom[ax] / rho) + cf)) / g.d[ax]
        return min(cfl / rate, t_remaining)

    def step(self, state: MhdState, dt: float) -> MhdState:
        g = self.grid
        self.fill_state(state)
        rho, mom, rhoE, B = state.rho, state.mom, state.rhoE, state.B
        p = phys.pressure_from_conserved(rho, mom, rhoE, B, self.gamma)
        U = np.stack([rho, mom[0], mom[1], mom[2], rhoE, B[0], B[1], B[2]])
        out = U.copy()
        for ax in g.active_axes:
            F = phys.full_flux(rho, mom, rhoE, B, p, ax, self.gamma)
            cf = phys.fast_speed(rho, p, B, ax, self.gamma)
            speed = np.abs(mom[ax] / rho) + cf
            for row in range(8):
                fm, fp = ops.reconstruct_interface_values(F[row], g, ax, self.order,
                                                          self.limiter)
                qm, qp = ops.reconstruct_interface_values(U[row], g, ax, self.order,
                                                          self.limiter)
                sm, sp = ops.reconstruct_interface_values(speed, g, ax, 1)
                alpha = np.maximum(sm, sp)
                face = 0.5 * (fp + fm) - 0.5 * alpha * (qp - qm)
                out[row] -= dt * ops._flux_difference(face, g, ax)
        new = MhdState(out[0], out[1:4], out[4], B=out[5:8])
        return self.fill_state(new)
