"""Equation of state, state conversions and characteristic speeds.

Gaussian-unit convention throughout: magnetic pressure is ``|B|^2 / 8pi``,
the Alfven speed is ``|B| / sqrt(4 pi rho)`` and all benchmark data are used
exactly as tabulated, with no internal rescaling.

Conserved variables are ordered ``(rho, rho*u, rho*v, rho*w, rho*E, Bx, By,
Bz)`` wherever a flat 8-component layout is needed (flux splitting, the
explicit reference solver).  Field arrays carry ghost layers owned by a
:class:`simhd.mesh.Grid`; every function here is a pure per-cell map and
broadcasts over arbitrary array shapes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FOUR_PI = 4.0 * np.pi
EIGHT_PI = 8.0 * np.pi


class AdmissibilityError(ValueError):
    """State with non-positive density or pressure where one is required."""


@dataclass(frozen=True)
class GasModel:
    """Ideal-gas closure, ``p = (gamma - 1) rho e``."""

    gamma: float = 5.0 / 3.0

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise AdmissibilityError(f"gamma must exceed 1, got {self.gamma}")


@dataclass(frozen=True)
class PrimitiveState:
    """Pointwise primitive state (density, velocity, pressure, field)."""

    rho: float
    v: tuple[float, float, float]
    p: float
    B: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.rho > 0.0:
            raise AdmissibilityError(f"density must be positive, got {self.rho}")
        if not self.p > 0.0:
            raise AdmissibilityError(f"pressure must be positive, got {self.p}")


@dataclass
class MhdState:
    """Conserved field bundle over a ghosted grid.

    Multi-D runs carry the magnetic potential ``A`` and derive the field
    from its curl; 1D runs carry ``B`` directly (the normal component is
    constant there, so solenoidality is trivial).  Exactly one of the two
    is set.
    """

    rho: np.ndarray
    mom: np.ndarray
    rhoE: np.ndarray
    A: np.ndarray | None = None
    B: np.ndarray | None = None

    @property
    def carries_potential(self) -> bool:
        return self.A is not None

    def copy(self) -> "MhdState":
        return MhdState(self.rho.copy(), self.mom.copy(), self.rhoE.copy(),
                        None if self.A is None else self.A.copy(),
                        None if self.B is None else self.B.copy())

    def magnetic(self) -> np.ndarray:
        """The carried magnetic array: A in potential mode, B otherwise."""
        return self.A if self.A is not None else self.B

    def with_magnetic(self, arr: np.ndarray) -> "MhdState":
        if self.carries_potential:
            return MhdState(self.rho, self.mom, self.rhoE, A=arr)
        return MhdState(self.rho, self.mom, self.rhoE, B=arr)


def state_combination(base: MhdState, increments, coeffs) -> MhdState:
    """``base + sum(c_j * k_j)`` fieldwise; used for IMEX stage states."""
    rho = base.rho.copy()
    mom = base.mom.copy()
    rhoE = base.rhoE.copy()
    mag = base.magnetic().copy()
    for c, k in zip(coeffs, increments):
        if c == 0.0:
            continue
        rho += c * k.rho
        mom += c * k.mom
        rhoE += c * k.rhoE
        mag += c * k.magnetic()
    if base.carries_potential:
        return MhdState(rho, mom, rhoE, A=mag)
    return MhdState(rho, mom, rhoE, B=mag)


def kinetic_energy_density(rho, mom):
    """rho*k = |mom|^2 / (2 rho)."""
    return 0.5 * (mom[0] ** 2 + mom[1] ** 2 + mom[2] ** 2) / rho


def magnetic_energy_density(B):
    """rho*m = |B|^2 / 8pi."""
    return (B[0] ** 2 + B[1] ** 2 + B[2] ** 2) / EIGHT_PI


def pressure_from_conserved(rho, mom, rhoE, B, gamma):
    """Invert the ideal-gas EOS: p = (gamma-1)(rhoE - rho k - rho m).

    The result may be non-positive for inadmissible inputs; callers surface
    that through diagnostics rather than clamping here.
    """
    return (gamma - 1.0) * (rhoE - kinetic_energy_density(rho, mom)
                            - magnetic_energy_density(B))


def conserved_from_primitive(rho, v, p, B, gamma):
    """Assemble (rho, mom, rhoE) from primitive fields; exact EOS inverse."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise AdmissibilityError("density must be positive")
    if np.any(np.asarray(p) <= 0.0):
        raise AdmissibilityError("pressure must be positive")
    mom = np.stack([rho * v[0], rho * v[1], rho * v[2]])
    rhoE = p / (gamma - 1.0) + kinetic_energy_density(rho, mom) \
        + magnetic_energy_density(B)
    return rho, mom, rhoE


def sound_speed(rho, p, gamma):
    return np.sqrt(gamma * np.maximum(p, 0.0) / rho)


def alfven_speed(rho, B):
    return np.sqrt((B[0] ** 2 + B[1] ** 2 + B[2] ** 2) / (FOUR_PI * rho))


def wave_speeds(rho, p, B, n, gamma):
    """Sound, Alfven and magneto-sonic speeds along unit direction ``n``.

    Returns ``(c, b, b_n, c_s, c_f)``.  The inner radical is analytically
    non-negative; it is clamped at zero to absorb rounding so that
    ``c_s <= min(c, b_n) <= max(c, b) <= c_f`` always holds.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise AdmissibilityError("density must be positive")
    c2 = gamma * np.asarray(p, dtype=float) / rho
    b2 = (B[0] ** 2 + B[1] ** 2 + B[2] ** 2) / (FOUR_PI * rho)
    bn2 = (B[0] * n[0] + B[1] * n[1] + B[2] * n[2]) ** 2 / (FOUR_PI * rho)
    s = c2 + b2
    disc = np.sqrt(np.maximum(s * s - 4.0 * c2 * bn2, 0.0))
    cs = np.sqrt(np.maximum(0.5 * (s - disc), 0.0))
    cf = np.sqrt(0.5 * (s + disc))
    return np.sqrt(np.maximum(c2, 0.0)), np.sqrt(b2), np.sqrt(bn2), cs, cf


def fast_speed(rho, p, B, axis, gamma):
    """Fast magneto-sonic speed along a coordinate axis."""
    n = [0.0, 0.0, 0.0]
    n[axis] = 1.0
    return wave_speeds(rho, p, B, n, gamma)[4]


def convective_max_speed(mom, rho):
    """Largest velocity-component magnitude: the convective spectral radius."""
    return max(float(np.max(np.abs(mom[d] / rho))) for d in range(3))


def magnetic_subsystem_speed(rho, u_n, B):
    """Spectral radius of the magnetic sub-system along one direction.

    Largest magnitude among ``(u +/- sqrt(u^2 + 4 w^2)) / 2`` for the normal
    Alfven speed and the total one.  The printed coefficient of the last
    eigenvalue pair is dimensionally a speed only when read as the total
    Alfven speed, which is what is used here; since the total dominates the
    normal component, the radius reduces to the total-speed branch.
    """
    b = alfven_speed(rho, B)
    return 0.5 * (np.abs(u_n) + np.sqrt(u_n * u_n + 4.0 * b * b))


def pressure_subsystem_eigs(rho, mom, rhoE, B, gamma, axis=0):
    """Nonzero pressure sub-system eigenvalues, diagnostic only.

    May be complex for strongly magnetized states; never used for stability.
    """
    u = mom[axis] / rho
    p = pressure_from_conserved(rho, mom, rhoE, B, gamma)
    c2 = gamma * p / rho
    k = kinetic_energy_density(rho, mom) / rho
    m = magnetic_energy_density(B) / rho
    rad = u * u + 4.0 * (c2 - (gamma - 1.0) * (m + k + u * u))
    root = np.sqrt(rad.astype(complex))
    return 0.5 * (u - root), 0.5 * (u + root)


def _perm(axis):
    # flux direction first, then the two transverse directions
    return (axis, (axis + 1) % 3, (axis + 2) % 3)


def split_fluxes(rho, mom, rhoE, B, p, axis, gamma):
    """Convective / pressure / magnetic flux triplet along ``axis``.

    Each part is an 8-row stack ordered like the conserved vector.  The
    convective part carries only mass and momentum advection, the pressure
    part the pressure force and the full hydrodynamic energy flux
    ``(rhoE + p) u_n``, and the magnetic part the magnetic pressure, tension,
    magnetic energy flux and induction terms.  Their sum is the physical
    flux of the ideal MHD system.
    """
    d, t1, t2 = _perm(axis)
    u = [mom[0] / rho, mom[1] / rho, mom[2] / rho]
    un = u[d]
    m = magnetic_energy_density(B)
    vdotB = u[0] * B[0] + u[1] * B[1] + u[2] * B[2]
    zeros = np.zeros_like(rho)

    fc = [rho * un, None, None, None, zeros, zeros, zeros, zeros]
    fp = [zeros, None, None, None, (rhoE + p) * un, zeros, zeros, zeros]
    fb = [zeros, None, None, None, m * un - B[d] * vdotB / FOUR_PI,
          None, None, None]
    for i in range(3):
        fc[1 + i] = mom[i] * un
        fp[1 + i] = p + zeros if i == d else zeros
        fb[1 + i] = (m + zeros if i == d else zeros) - B[d] * B[i] / FOUR_PI
        fb[5 + i] = zeros if i == d else un * B[i] - u[i] * B[d]
    return np.stack(fc), np.stack(fp), np.stack(fb)


def full_flux(rho, mom, rhoE, B, p, axis, gamma):
    """Unsplit physical flux along ``axis`` (reference solver)."""
    fc, fp, fb = split_fluxes(rho, mom, rhoE, B, p, axis, gamma)
    return fc + fp + fb
