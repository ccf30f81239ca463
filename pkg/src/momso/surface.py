"""Surface admittance operators for solid conductors, tubes and empty holes.

An equivalence-principle current on each conductor surface replaces its
interior with the surrounding (hole) medium; per Fourier harmonic the
current and tangential field coefficients are linked by material-dependent
Bessel log-derivative brackets.  Tubes carry a current on each surface and
couple the two through the annulus Dirichlet-to-Neumann maps, evaluated in
exponentially scaled Hankel functions so high-frequency metal walls do not
overflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .greens import ContourRef
from .model import (
    CableSystem,
    GroundModel,
    Hole,
    Material,
    SolidConductor,
    TubularConductor,
)
from .special import bessel_j, bessel_j_log_derivative

__all__ = [
    "HoleResonanceError",
    "SurfaceBlock",
    "HarmonicBasis",
    "HoleAdmittance",
    "solid_conductor_admittance",
    "tubular_conductor_admittance",
    "hole_surface_admittance",
    "build_system_admittance",
]


class HoleResonanceError(ArithmeticError):
    """An interior Bessel zero makes a hole operator singular at this
    frequency; the caller may retry with a slightly perturbed frequency."""


@dataclass(frozen=True)
class SurfaceBlock:
    """One contiguous run of harmonic unknowns for one conductor surface."""

    conductor: int
    side: str  # "outer" | "inner"
    order: int
    offset: int

    @property
    def size(self) -> int:
        return 2 * self.order + 1

    @property
    def slice(self) -> slice:
        return slice(self.offset, self.offset + self.size)


class HarmonicBasis:
    """Global indexing of the truncated Fourier coefficients.

    Solid conductors contribute one block per surface; tubes contribute an
    inner block followed by an outer block.  Block layout follows conductor
    config order, so flat index <-> (conductor, side, harmonic) is bijective.
    """

    def __init__(self, system: CableSystem):
        self.system = system
        blocks: list[SurfaceBlock] = []
        offset = 0
        for p, c in enumerate(system.conductors):
            if isinstance(c, TubularConductor):
                for side in ("inner", "outer"):
                    blocks.append(SurfaceBlock(p, side, c.order, offset))
                    offset += 2 * c.order + 1
            else:
                blocks.append(SurfaceBlock(p, "outer", c.order, offset))
                offset += 2 * c.order + 1
        self.blocks: tuple[SurfaceBlock, ...] = tuple(blocks)
        self.size: int = offset

    def conductor_blocks(self, p: int) -> list[SurfaceBlock]:
        return [b for b in self.blocks if b.conductor == p]

    def flat_index(self, p: int, side: str, n: int) -> int:
        for b in self.blocks:
            if b.conductor == p and b.side == side:
                if abs(n) > b.order:
                    raise IndexError(f"harmonic {n} beyond order {b.order}")
                return b.offset + n + b.order
        raise KeyError((p, side))

    def contour(self, block: SurfaceBlock) -> ContourRef:
        c = self.system.conductors[block.conductor]
        if block.side == "inner":
            radius = c.inner_radius
        else:
            radius = c.outer_radius if isinstance(c, TubularConductor) else c.radius
        return ContourRef(f"conductor-{block.side}", c.x, c.y, radius,
                          block.order)

    def contours(self) -> list[ContourRef]:
        return [self.contour(b) for b in self.blocks]

    def blocks_in_hole(self, hole_index: int) -> list[SurfaceBlock]:
        members = set(self.system.members_of(hole_index))
        return [b for b in self.blocks if b.conductor in members]


def solid_conductor_admittance(
    cond: SolidConductor, outside: Material, omega: float
) -> np.ndarray:
    """Diagonal admittance entries for harmonics n = -N..N of a solid rod.

    Entry n:  (2 pi a / j omega) [ (k/mu) J'_|n|/J_|n| (k a)
                                 - (k_out/mu_out) J'_|n|/J_|n| (k_out a) ]
    with k of the rod material and k_out of the replacing medium; it
    vanishes identically when the two media coincide.
    """
    if omega <= 0.0:
        raise ValueError("omega must be > 0")
    a = cond.radius
    if cond.material == outside:
        return np.zeros(2 * cond.order + 1, dtype=complex)
    k_in = cond.material.wavenumber(omega)
    k_out = outside.wavenumber(omega)
    vals = np.empty(2 * cond.order + 1, dtype=complex)
    for n in range(cond.order + 1):
        bracket = (k_in / cond.material.mu
                   * bessel_j_log_derivative(n, k_in * a)
                   - k_out / outside.mu
                   * bessel_j_log_derivative(n, k_out * a))
        y = 2.0 * np.pi * a / (1j * omega) * bracket
        vals[cond.order + n] = y
        vals[cond.order - n] = y
    return vals


def _scaled_ik_pair(n: int, w: complex):
    # (I, I', K, K') at order n with the amos scalings removed only up to
    # common factors:  I = ie * e^{Re w},  K = ke * e^{-w}.
    orders = np.array([abs(n - 1), n, n + 1])
    ie = _sp.ive(orders, w)
    ke = _sp.kve(orders, w)
    return ie[1], 0.5 * (ie[0] + ie[2]), ke[1], -0.5 * (ke[0] + ke[2])


def _annulus_dtn_static(b1: float, b2: float, n: int):
    # Laplace limit of the annulus map; exact, cancellation-free.
    if n == 0:
        ell = np.log(b2 / b1)
        return (-1.0 / (b1 * ell), 1.0 / (b1 * ell),
                -1.0 / (b2 * ell), 1.0 / (b2 * ell))
    q = (b1 / b2) ** n
    r2 = q * q
    s_aa = (n / b1) * (r2 + 1.0) / (r2 - 1.0)
    s_ab = -(2.0 * n / b1) * q / (r2 - 1.0)
    s_ba = (2.0 * n / b2) * q / (r2 - 1.0)
    s_bb = -(n / b2) * (r2 + 1.0) / (r2 - 1.0)
    return s_aa, s_ab, s_ba, s_bb


def _annulus_dtn(k: complex, b1: float, b2: float, n: int):
    """Dirichlet-to-Neumann map of the annulus Helmholtz problem.

    For psi solving (Laplacian + k^2) psi = 0 in b1 < rho < b2 with
    psi(b1) = E1, psi(b2) = E2, returns (S_aa, S_ab, S_ba, S_bb) such that
    psi'(b1) = S_aa E1 + S_ab E2 and psi'(b2) = S_ba E1 + S_bb E2.

    Evaluated in the scaled modified-Bessel basis I_n(m rho), K_n(m rho)
    with m = jk (Re m >= 0): only wall-thickness exponentials appear, so
    neither MHz skin depths (thick walls) nor near-static arguments can
    overflow or cancel catastrophically.  Arguments small enough that the
    k^2 correction drops below roundoff use the exact Laplace map.
    """
    z1 = k * b1
    z2 = k * b2
    if abs(z2) ** 2 * abs(z2 - z1) < 1e-15:
        return _annulus_dtn_static(b1, b2, n)
    m = 1j * k  # principal Re k >= 0, Im k <= 0  ->  Re m >= 0
    w1 = m * b1
    w2 = m * b2
    ie1, ide1, ke1, kde1 = _scaled_ik_pair(n, w1)
    ie2, ide2, ke2, kde2 = _scaled_ik_pair(n, w2)
    # I(w1)K(w2) = ie1 ke2 F damp,  I(w2)K(w1) = ie2 ke1 F  with
    # F = e^{Re w2 - w1}, damp = e^{(w1-w2) + Re(w1-w2)}, |damp| <= 1.
    damp = np.exp((w1 - w2) + (w1.real - w2.real))
    denom = ie1 * ke2 * damp - ie2 * ke1
    if denom == 0 or not np.isfinite(denom):
        raise ArithmeticError(
            f"annulus resonance: Dirichlet determinant vanished (n={n})"
        )
    s_aa = m * (ide1 * ke2 * damp - kde1 * ie2) / denom
    s_bb = m * (ie1 * kde2 * damp - ke1 * ide2) / denom
    inv_f = np.exp((w1.real - w2.real) + 1j * w1.imag)  # 1/F, |1/F| <= 1
    s_ab = -inv_f / (b1 * denom)
    s_ba = inv_f / (b2 * denom)
    return s_aa, s_ab, s_ba, s_bb


def tubular_conductor_admittance(
    cond: TubularConductor,
    inner_medium: Material,
    outer_medium: Material,
    omega: float,
) -> np.ndarray:
    """Per-harmonic 2x2 admittance blocks of a tube, shape (2N+1, 2, 2).

    Row/column order is (inner, outer).  Currents are the tangential-field
    jumps between the metal annulus solution and the annulus solution of the
    replacing outer medium, both with the same Dirichlet surface data; the
    inner-side medium cancels through field continuity at the inner boundary
    and is accepted only for interface compatibility.  Each block is
    symmetric and vanishes when metal and replacing medium coincide.
    """
    del inner_medium  # cancels exactly; see docstring
    if omega <= 0.0:
        raise ValueError("omega must be > 0")
    b1, b2 = cond.inner_radius, cond.outer_radius
    out = np.zeros((2 * cond.order + 1, 2, 2), dtype=complex)
    if cond.material == outer_medium:
        return out
    k_m = cond.material.wavenumber(omega)
    k_o = outer_medium.wavenumber(omega)
    mu_m = cond.material.mu
    mu_o = outer_medium.mu
    for n in range(cond.order + 1):
        maa, mab, mba, mbb = _annulus_dtn(k_m, b1, b2, n)
        oaa, oab, oba, obb = _annulus_dtn(k_o, b1, b2, n)
        blk = np.empty((2, 2), dtype=complex)
        pre1 = 2.0 * np.pi * b1 / (1j * omega)
        pre2 = 2.0 * np.pi * b2 / (1j * omega)
        blk[0, 0] = pre1 * (oaa / mu_o - maa / mu_m)
        blk[0, 1] = pre1 * (oab / mu_o - mab / mu_m)
        blk[1, 0] = pre2 * (mba / mu_m - oba / mu_o)
        blk[1, 1] = pre2 * (mbb / mu_m - obb / mu_o)
        out[cond.order + n] = blk
        out[cond.order - n] = blk
    return out


@dataclass(frozen=True)
class HoleAdmittance:
    """Empty-hole surface admittance and its auxiliary diagonals.

    ``ys``: diagonal of the hole surface admittance;
    ``d1``: 1/J_|n|(k_hat a_hat);
    ``d2``: k_hat J'_|n|/J_|n| (k_hat a_hat).  All length 2N+1.
    """

    ys: np.ndarray
    d1: np.ndarray
    d2: np.ndarray


_RESONANCE_FLOOR = 1e-10


def _bessel_j_envelope(n: int, z: complex) -> float:
    # Natural magnitude of J_n at z: the oscillatory envelope sqrt(2/(pi|z|))
    # once |z| is past the first zero, the leading power-series term below
    # it.  Distinguishes a genuine zero of J_n from the (astronomically
    # small) small-argument values a low-frequency hole produces.
    az = abs(z)
    if az >= n + 2:
        body = np.sqrt(2.0 / (np.pi * az))
    else:
        body = (0.5 * az) ** n / float(_sp.factorial(n))
    return float(body * min(np.exp(abs(z.imag)), 1e280))


def hole_surface_admittance(
    hole: Hole, ground: GroundModel, omega: float
) -> HoleAdmittance:
    """Surface admittance of the hole boundary against the ground medium.

    Raises ``HoleResonanceError`` when J_|n|(k_hat a_hat) is numerically at a
    zero (possible for a lossless interior at high frequency); callers may
    retry with omega perturbed by one part in 1e9.
    """
    if omega <= 0.0:
        raise ValueError("omega must be > 0")
    a = hole.radius
    k_g = ground.wavenumber(omega)
    k_h = hole.material.wavenumber(omega)
    mu_g = ground.material.mu
    mu_h = hole.material.mu
    size = 2 * hole.order + 1
    ys = np.empty(size, dtype=complex)
    d1 = np.empty(size, dtype=complex)
    d2 = np.empty(size, dtype=complex)
    j_vals = np.array([bessel_j(n, k_h * a) for n in range(hole.order + 1)])
    matched = (k_g == k_h and mu_g == mu_h)
    for n in range(hole.order + 1):
        near_zero = (abs(j_vals[n])
                     < _RESONANCE_FLOOR * _bessel_j_envelope(n, k_h * a))
        if near_zero or not np.isfinite(1.0 / j_vals[n]):
            raise HoleResonanceError(
                f"J_{n}(k_hat*a) ~ 0 for hole {hole.ident!r} at "
                f"omega={omega:g}; interior resonance"
            )
        ld_h = bessel_j_log_derivative(n, k_h * a)
        if matched:
            y = 0.0 + 0.0j
        else:
            ld_g = bessel_j_log_derivative(n, k_g * a)
            y = 2.0 * np.pi * a * (k_g / mu_g * ld_g - k_h / mu_h * ld_h)
        for i in (hole.order + n, hole.order - n):
            ys[i] = y
            d1[i] = 1.0 / j_vals[n]
            d2[i] = k_h * ld_h
    return HoleAdmittance(ys=ys, d1=d1, d2=d2)


def build_system_admittance(
    system: CableSystem, basis: HarmonicBasis, omega: float,
    exterior: Material | None = None,
) -> np.ndarray:
    """Block-diagonal conductor surface admittance for the whole system.

    The replacing medium for each conductor is its hole interior, or
    ``exterior`` (the ground material in direct-burial mode) when given.
    """
    ys = np.zeros((basis.size, basis.size), dtype=complex)
    for p, c in enumerate(system.conductors):
        if exterior is not None:
            medium = exterior
        elif c.hole is not None:
            medium = system.holes[system.hole_index(c.hole)].material
        else:
            medium = system.ground.material
        blocks = basis.conductor_blocks(p)
        if isinstance(c, TubularConductor):
            blk_in = next(b for b in blocks if b.side == "inner")
            blk_out = next(b for b in blocks if b.side == "outer")
            y22 = tubular_conductor_admittance(c, medium, medium, omega)
            for i, n in enumerate(range(-c.order, c.order + 1)):
                ii = blk_in.offset + i
                oo = blk_out.offset + i
                ys[ii, ii] = y22[i, 0, 0]
                ys[ii, oo] = y22[i, 0, 1]
                ys[oo, ii] = y22[i, 1, 0]
                ys[oo, oo] = y22[i, 1, 1]
        else:
            blk = blocks[0]
            np.fill_diagonal(
                ys[blk.slice, blk.slice],
                solid_conductor_admittance(c, medium, omega),
            )
    return ys
