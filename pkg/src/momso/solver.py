"""Operator assembly and extraction of the series R(omega), L(omega) matrices.

Two layouts are supported: every conductor inside a hole (cables in
insulation slots or a tunnel), or every conductor in direct contact with the
ground.  Per frequency the chain is

    conductor admittance Ys  ->  per-hole transfer T and hole admittance
    ->  hole potentials through the two-layer ground matrix  ->  the
    field-to-current closure Psi  ->  R + jwL.

All assembly is pure in (geometry, omega); frequencies can be solved
concurrently without shared state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import mu_0

from .greens import (
    ContourRef,
    homogeneous_harmonic_matrix,
    homogeneous_harmonic_matrix_radial_derivative,
    regular_wave_matrix,
    two_layer_harmonic_matrix,
)
from .model import CableSystem
from .special import QuadratureSpec
from .surface import (
    HarmonicBasis,
    HoleAdmittance,
    HoleResonanceError,
    build_system_admittance,
    hole_surface_admittance,
)

__all__ = [
    "SolverError",
    "ResonanceError",
    "AssemblyError",
    "UnsupportedSystemError",
    "HoleOperators",
    "OperatorSet",
    "ImpedanceResult",
    "assemble_T",
    "solve_hole_potentials",
    "assemble_psi",
    "selection_matrix_U",
    "build_operator_set",
    "extract_RL",
    "solve_frequency",
]

logger = logging.getLogger("momso.solver")

_ASYMMETRY_TOL = 1e-8
_COND_WARN = 1e10
_COND_FAIL = 1e13


class SolverError(RuntimeError):
    pass


class ResonanceError(SolverError):
    """A linear stage is singular (or numerically singular)."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class AssemblyError(SolverError):
    """Result violates a structural requirement; indicates an assembly bug."""


class UnsupportedSystemError(SolverError):
    pass


@dataclass
class HoleOperators:
    """All per-hole matrices; row space is the hole's 2N+1 harmonics."""

    hole_index: int
    admittance: HoleAdmittance
    g0hat: np.ndarray      # hole x member harmonics
    g0tilde: np.ndarray    # radial-derivative counterpart
    t: np.ndarray          # current transfer, 2 pi a (g0tilde - D2 g0hat)
    h: np.ndarray          # member x hole evaluation of regular modes
    gc: np.ndarray         # member x member homogeneous kernel
    member_cols: np.ndarray  # global flat indices of member harmonics


@dataclass
class OperatorSet:
    """Every matrix needed to close the system at one frequency."""

    omega: float
    mode: str  # "holes" | "direct"
    basis: HarmonicBasis
    ys: np.ndarray
    u: np.ndarray
    psi: np.ndarray
    holes: list[HoleOperators] = field(default_factory=list)
    gg: np.ndarray | None = None
    hole_potential_map: np.ndarray | None = None


@dataclass
class ImpedanceResult:
    """Per-frequency series resistance and inductance matrices."""

    frequencies: np.ndarray          # Hz
    resistance: list[np.ndarray]     # P x P, ohm/m
    inductance: list[np.ndarray]     # P x P, H/m

    def __post_init__(self):
        if not (len(self.frequencies) == len(self.resistance)
                == len(self.inductance)):
            raise ValueError("inconsistent result lengths")


def _hole_contour(hole) -> ContourRef:
    return ContourRef("hole", hole.x, hole.y, hole.radius, hole.order)


def assemble_T(g0tilde: np.ndarray, g0hat: np.ndarray, d2: np.ndarray,
               radius: float) -> np.ndarray:
    """Conductor-current to hole-current transfer matrix."""
    if g0tilde.shape != g0hat.shape or d2.shape[0] != g0hat.shape[0]:
        raise ValueError("operator dimensions do not match")
    return 2.0 * np.pi * radius * (g0tilde - d2[:, None] * g0hat)


def solve_hole_potentials(gg: np.ndarray, ys_hat: np.ndarray,
                          t_glob: np.ndarray) -> np.ndarray:
    """Map conductor currents to hole-boundary potential coefficients.

    Returns M_A with A_hat = M_A J, i.e.
    -mu_0 (1 + mu_0 Gg diag(ys_hat))^{-1} Gg T, stacked over holes.
    """
    nh = gg.shape[0]
    lhs = np.eye(nh, dtype=complex) + mu_0 * gg * ys_hat[None, :]
    cond = np.linalg.cond(lhs)
    if not np.isfinite(cond) or cond > _COND_FAIL:
        raise ResonanceError(
            f"hole-potential system singular (cond={cond:.3e})",
            condition=cond,
        )
    if cond > _COND_WARN:
        logger.warning("hole-potential system poorly conditioned: %.3e", cond)
    return -mu_0 * np.linalg.solve(lhs, gg @ t_glob)


def selection_matrix_U(basis: HarmonicBasis) -> np.ndarray:
    """Maps per-conductor scalars onto n = 0 harmonics.

    Both surfaces of a tube get the entry, so U^T J sums the n = 0
    coefficients and yields the total conductor current.
    """
    p_count = basis.system.n_conductors
    u = np.zeros((basis.size, p_count))
    for b in basis.blocks:
        u[b.offset + b.order, b.conductor] = 1.0
    return u


def _build_hole_operators(system: CableSystem, basis: HarmonicBasis,
                          hi: int, omega: float) -> HoleOperators:
    hole = system.holes[hi]
    k_hat = hole.material.wavenumber(omega)
    hc = _hole_contour(hole)
    blocks = basis.blocks_in_hole(hi)
    contours = [basis.contour(b) for b in blocks]
    cols = np.concatenate([np.arange(b.offset, b.offset + b.size)
                           for b in blocks]) if blocks else np.empty(0, int)

    if blocks:
        g0hat = np.hstack([homogeneous_harmonic_matrix(hc, c, k_hat)
                           for c in contours])
        g0tilde = np.hstack([
            homogeneous_harmonic_matrix_radial_derivative(hc, c, k_hat)
            for c in contours
        ])
        h = regular_wave_matrix(contours, hc, k_hat)
        gc = np.block([[homogeneous_harmonic_matrix(co, cs, k_hat)
                        for cs in contours] for co in contours])
    else:
        g0hat = np.empty((hc.size, 0), dtype=complex)
        g0tilde = np.empty((hc.size, 0), dtype=complex)
        h = np.empty((0, hc.size), dtype=complex)
        gc = np.empty((0, 0), dtype=complex)

    admit = hole_surface_admittance(hole, system.ground, omega)
    t = assemble_T(g0tilde, g0hat, admit.d2, hole.radius)
    return HoleOperators(hole_index=hi, admittance=admit, g0hat=g0hat,
                         g0tilde=g0tilde, t=t, h=h, gc=gc, member_cols=cols)


def assemble_psi(system: CableSystem, omega: float, basis: HarmonicBasis,
                 hole_ops: list[HoleOperators], gg: np.ndarray,
                 hole_potential_map: np.ndarray) -> np.ndarray:
    """Field closure: E = j omega Psi J + potential-gradient term.

    Per hole, Psi = H D1 [mu_0 (1 + mu_0 Gg Ys_hat)^{-1} Gg T - mu_hat G0]
    + mu_hat Gc, block-assembled over holes through the full ground matrix.
    """
    nc = basis.size
    psi = np.zeros((nc, nc), dtype=complex)
    offsets = _hole_offsets(system)
    for ops in hole_ops:
        hole = system.holes[ops.hole_index]
        rows = slice(offsets[ops.hole_index],
                     offsets[ops.hole_index] + 2 * hole.order + 1)
        mu_hat = hole.material.mu
        bracket = -hole_potential_map[rows, :]
        bracket[:, ops.member_cols] -= mu_hat * ops.g0hat
        contrib = ops.h @ (ops.admittance.d1[:, None] * bracket)
        psi[ops.member_cols, :] += contrib
        psi[np.ix_(ops.member_cols, ops.member_cols)] += mu_hat * ops.gc
    return psi


def _hole_offsets(system: CableSystem) -> list[int]:
    offsets = []
    acc = 0
    for h in system.holes:
        offsets.append(acc)
        acc += 2 * h.order + 1
    return offsets


def build_operator_set(system: CableSystem, omega: float,
                       quad: QuadratureSpec | None = None) -> OperatorSet:
    """Assemble every per-frequency operator for the system."""
    if omega <= 0.0:
        raise ValueError("omega must be > 0")
    quad = quad or QuadratureSpec()
    basis = HarmonicBasis(system)
    in_holes = [c.hole is not None for c in system.conductors]

    if all(in_holes):
        mode = "holes"
    elif not any(in_holes):
        mode = "direct"
    else:
        raise UnsupportedSystemError(
            "mixed direct-buried and in-hole conductors are not supported"
        )

    u = selection_matrix_U(basis)

    if mode == "direct":
        ys = build_system_admittance(system, basis, omega,
                                     exterior=system.ground.material)
        contours = basis.contours()
        psi = mu_0 * np.block([
            [two_layer_harmonic_matrix(co, cs, omega, system.ground, quad)
             for cs in contours] for co in contours
        ])
        return OperatorSet(omega=omega, mode=mode, basis=basis, ys=ys, u=u,
                           psi=psi)

    ys = build_system_admittance(system, basis, omega)
    hole_ops = [_build_hole_operators(system, basis, hi, omega)
                for hi in range(len(system.holes))]
    hole_contours = [_hole_contour(h) for h in system.holes]
    gg = np.block([
        [two_layer_harmonic_matrix(co, cs, omega, system.ground, quad)
         for cs in hole_contours] for co in hole_contours
    ])
    ys_hat = np.concatenate([ops.admittance.ys for ops in hole_ops])
    nc = basis.size
    offsets = _hole_offsets(system)
    t_glob = np.zeros((gg.shape[0], nc), dtype=complex)
    for ops in hole_ops:
        hole = system.holes[ops.hole_index]
        rows = slice(offsets[ops.hole_index],
                     offsets[ops.hole_index] + 2 * hole.order + 1)
        t_glob[rows, ops.member_cols] = ops.t
    m_a = solve_hole_potentials(gg, ys_hat, t_glob)
    psi = assemble_psi(system, omega, basis, hole_ops, gg, m_a)
    return OperatorSet(omega=omega, mode=mode, basis=basis, ys=ys, u=u,
                       psi=psi, holes=hole_ops, gg=gg, hole_potential_map=m_a)


def extract_RL(system: CableSystem, omega: float,
               quad: QuadratureSpec | None = None,
               operators: OperatorSet | None = None):
    """Series resistance and inductance matrices at one angular frequency.

    R = Re{ (U^T (1 - j w Ys Psi)^{-1} Ys U)^{-1} },  L = Im{...}/w.
    The result must be symmetric to 1e-8 relative (then exactly symmetrized);
    a larger asymmetry indicates an assembly bug and raises.
    """
    ops = operators or build_operator_set(system, omega, quad)
    nc = ops.basis.size
    lhs = np.eye(nc, dtype=complex) - 1j * omega * (ops.ys @ ops.psi)
    cond = np.linalg.cond(lhs)
    if not np.isfinite(cond) or cond > _COND_FAIL:
        raise ResonanceError(
            f"field-closure system singular (cond={cond:.3e})", condition=cond
        )
    if cond > _COND_WARN:
        logger.warning("field-closure system poorly conditioned: %.3e", cond)
    m = np.linalg.solve(lhs, ops.ys)
    k = ops.u.T @ m @ ops.u
    try:
        z = np.linalg.inv(k)
    except np.linalg.LinAlgError as exc:
        raise ResonanceError(f"terminal admittance singular: {exc}") from exc
    asym = np.linalg.norm(z - z.T) / max(np.linalg.norm(z), 1e-300)
    if asym > _ASYMMETRY_TOL:
        raise AssemblyError(
            f"impedance matrix asymmetric beyond tolerance: {asym:.3e}"
        )
    z = 0.5 * (z + z.T)
    return np.real(z), np.imag(z) / omega


def solve_frequency(system: CableSystem, frequency_hz: float,
                    quad: QuadratureSpec | None = None):
    """R, L at one frequency, retrying once across a hole resonance.

    A lossless hole interior can put k_hat * a_hat exactly on a Bessel zero;
    per the resonance rule the frequency is then nudged by one part in 1e9.
    """
    omega = 2.0 * np.pi * frequency_hz
    try:
        return extract_RL(system, omega, quad)
    except HoleResonanceError:
        logger.warning("hole resonance at f=%g Hz; retrying with 1e-9 nudge",
                       frequency_hz)
        return extract_RL(system, omega * (1.0 + 1e-9), quad)
