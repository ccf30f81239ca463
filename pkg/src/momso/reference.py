"""Classical cable-constant formulas used as oracles and comparison baselines.

Skin-effect rod/tube impedances, Pollaczek's earth-return integral and the
Saad closed-form approximation, stacked into the conventional single-core
cable impedance matrix (coaxial loops plus thin-wire ground return, no
proximity modeling).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as _sp
from scipy.constants import mu_0

from . import _kernels
from .model import CableSystem, SolidConductor, TubularConductor
from .special import QuadratureSpec, semi_infinite_quadrature

__all__ = [
    "ReferenceGeometryError",
    "LoopGeometry",
    "TubeImpedance",
    "solid_internal_impedance_exact",
    "tubular_internal_impedance",
    "pollaczek_mutual_impedance",
    "saad_ground_impedance",
    "cable_constants_impedance",
]


class ReferenceGeometryError(ValueError):
    """System not expressible in the classical coaxial-cable formula stack."""


@dataclass(frozen=True)
class LoopGeometry:
    """Buried-loop geometry for ground-return formulas.

    ``d`` is the horizontal separation (the equivalent outer radius for a
    self term), ``h1``/``h2`` the burial depths, all in meters.
    """

    d: float
    h1: float
    h2: float

    def __post_init__(self):
        if self.d < 0.0 or self.h1 <= 0.0 or self.h2 <= 0.0:
            raise ValueError("need d >= 0 and depths > 0")


def solid_internal_impedance_exact(a: float, sigma: float, mu: float,
                                   omega: float) -> complex:
    """Exact internal impedance of a round rod, (k/(2 pi a sigma)) J0/J1(ka).

    k = sqrt(-j omega mu sigma); evaluated through the continued-fraction
    ratio so MHz copper arguments cannot overflow.  DC limit rho/(pi a^2).
    """
    if a <= 0.0 or sigma <= 0.0 or omega <= 0.0:
        raise ValueError("a, sigma, omega must be > 0")
    k = np.sqrt(-1j * omega * mu * sigma)
    ratio, iters = _kernels.cf1_bessel_ratio(0.0, k * a, 1e-16,
                                             int(4 * abs(k * a)) + 400)
    if iters < 0:
        raise ArithmeticError("J1/J0 continued fraction did not converge")
    return k / (2.0 * np.pi * a * sigma) / ratio


@dataclass(frozen=True)
class TubeImpedance:
    """Surface and transfer impedances of a tubular conductor (ohm/m)."""

    inner: complex
    outer: complex
    transfer: complex


def _scaled_h01(z: complex):
    # H1, H1', H2, H2' at order 0 with e^{+jz}/e^{-jz} scaling removed.
    h1 = _sp.hankel1e([0, 1], z)
    h2 = _sp.hankel2e([0, 1], z)
    return h1[0], -h1[1], h2[0], -h2[1]


def tubular_internal_impedance(b_in: float, b_out: float, sigma: float,
                               mu: float, omega: float) -> TubeImpedance:
    """Classical tube surface/transfer impedances from the annulus solution.

    Solved in a Hankel basis scaled per surface, so the wall thickness in
    skin depths can be arbitrarily large; the transfer impedance then
    underflows gracefully.  DC limit of both surfaces: rho/(pi (b2^2-b1^2)).
    """
    if not 0.0 < b_in < b_out:
        raise ValueError("need 0 < b_in < b_out")
    if sigma <= 0.0 or omega <= 0.0:
        raise ValueError("sigma and omega must be > 0")
    k = np.sqrt(-1j * omega * mu * sigma)
    z1, z2 = k * b_in, k * b_out
    h1e_1, h1de_1, h2e_1, h2de_1 = _scaled_h01(z1)
    h1e_2, h1de_2, h2e_2, h2de_2 = _scaled_h01(z2)
    # Basis phi1 = H1(k rho) e^{-j z2}, phi2 = H2(k rho) e^{+j z1}: every
    # matrix entry is O(1) or decaying for Im k < 0.
    e21 = np.exp(-1j * (z2 - z1))
    m = np.array([[h1de_1 * e21, h2de_1],
                  [h1de_2, h2de_2 * e21]])
    v1 = np.array([h1e_1 * e21, h2e_1])
    v2 = np.array([h1e_2, h2e_2 * e21])

    jwm = 1j * omega * mu
    # return outside: H(b1) = 0, H(b2) = I/(2 pi b2)
    ab = np.linalg.solve(m, np.array([0.0, jwm / (2.0 * np.pi * b_out)]) / k)
    z_outer = v2 @ ab
    z_transfer = v1 @ ab
    # return inside: H(b1) = -I/(2 pi b1), H(b2) = 0
    ab = np.linalg.solve(m, np.array([-jwm / (2.0 * np.pi * b_in), 0.0]) / k)
    z_inner = v1 @ ab
    return TubeImpedance(inner=complex(z_inner), outer=complex(z_outer),
                         transfer=complex(z_transfer))


def pollaczek_mutual_impedance(geom: LoopGeometry, sigma_g: float,
                               omega: float,
                               spec: QuadratureSpec | None = None) -> complex:
    """Earth-return impedance of a buried loop by Pollaczek's integral.

    Z = (j w mu0 / 2 pi) [K0(g D) - K0(g D') + 2 J],
    J = int_0^inf e^{-(h1+h2) sqrt(b^2+g^2)} / (b + sqrt(b^2+g^2)) cos(b d) db
    with g = sqrt(j w mu0 sigma_g), D/D' the direct/image distances.
    """
    if sigma_g <= 0.0 or omega <= 0.0:
        raise ValueError("sigma_g and omega must be > 0")
    spec = spec or QuadratureSpec(rtol=1e-12, atol=1e-16)
    g = np.sqrt(1j * omega * mu_0 * sigma_g)
    dd = np.hypot(geom.d, geom.h1 - geom.h2)
    di = np.hypot(geom.d, geom.h1 + geom.h2)
    if dd == 0.0:
        raise ValueError("coincident conductors: use d > 0 or h1 != h2")
    hsum = geom.h1 + geom.h2

    def integrand(beta):
        root = np.sqrt(beta * beta + g * g)
        return np.exp(-hsum * root) / (beta + root) * np.cos(beta * geom.d)

    tail = semi_infinite_quadrature(integrand, decay_rate=hsum, spec=spec,
                                    vectorized=True)
    k0d = _sp.kv(0, g * dd)
    k0i = _sp.kv(0, g * di)
    return (1j * omega * mu_0 / (2.0 * np.pi)) * (k0d - k0i + 2.0 * tail)


def saad_ground_impedance(geom: LoopGeometry, sigma_g: float,
                          omega: float) -> complex:
    """Closed-form ground-return approximation.

    Z = (j w mu0 / 2 pi) [K0(g D) + 2 e^{-(h1+h2) g} / (4 + g^2 d^2)].
    Valid for |g| d and |g| h up to order one (roughly: separations and
    depths below a skin depth); returned as-is outside that region, where
    its real part is known to go negative at high frequency.
    """
    if sigma_g <= 0.0 or omega <= 0.0:
        raise ValueError("sigma_g and omega must be > 0")
    g = np.sqrt(1j * omega * mu_0 * sigma_g)
    dd = np.hypot(geom.d, geom.h1 - geom.h2)
    if dd == 0.0:
        raise ValueError("coincident conductors: use d > 0 or h1 != h2")
    term = 2.0 * np.exp(-(geom.h1 + geom.h2) * g) / (4.0 + g * g * geom.d ** 2)
    return (1j * omega * mu_0 / (2.0 * np.pi)) * (_sp.kv(0, g * dd) + term)


_CONC_TOL = 1e-9


@dataclass(frozen=True)
class _ScCable:
    core: int       # conductor indices in system order
    sheath: int
    x: float
    y: float
    core_radius: float
    sheath_in: float
    sheath_out: float
    outer_radius: float


def _as_sc_cables(system: CableSystem) -> list[_ScCable]:
    cables = []
    for hi, hole in enumerate(system.holes):
        members = system.members_of(hi)
        solids = [i for i in members
                  if isinstance(system.conductors[i], SolidConductor)]
        tubes = [i for i in members
                 if isinstance(system.conductors[i], TubularConductor)]
        if len(solids) != 1 or len(tubes) != 1:
            raise ReferenceGeometryError(
                f"hole {hole.ident!r}: need exactly one core and one sheath"
            )
        core = system.conductors[solids[0]]
        sheath = system.conductors[tubes[0]]
        for c in (core, sheath):
            if np.hypot(c.x - hole.x, c.y - hole.y) > _CONC_TOL * hole.radius:
                raise ReferenceGeometryError(
                    f"hole {hole.ident!r}: conductors must be concentric "
                    "with the hole for the coaxial formula stack"
                )
        if not core.radius < sheath.inner_radius:
            raise ReferenceGeometryError("core must sit inside the sheath bore")
        cables.append(_ScCable(
            core=solids[0], sheath=tubes[0], x=hole.x, y=hole.y,
            core_radius=core.radius, sheath_in=sheath.inner_radius,
            sheath_out=sheath.outer_radius, outer_radius=hole.radius,
        ))
    if not cables:
        raise ReferenceGeometryError("no single-core cables found")
    if system.direct_conductors():
        raise ReferenceGeometryError("all conductors must belong to cables")
    return cables


def cable_constants_impedance(system: CableSystem, omega: float,
                              ground_formula: str = "pollaczek") -> np.ndarray:
    """P x P series impedance by the classical coaxial-cable formula stack.

    Internal rod/tube impedances, coaxial insulation inductances
    (mu0/2pi) ln(r2/r1), and thin-wire earth return (Pollaczek or Saad) for
    self and mutual terms.  Skin effect included, proximity neglected, so
    this is the comparison baseline the surface-operator solver is judged
    against.  Matrix order follows conductor config order.
    """
    if ground_formula not in ("pollaczek", "saad"):
        raise ValueError("ground_formula must be 'pollaczek' or 'saad'")
    ground_fn = (pollaczek_mutual_impedance if ground_formula == "pollaczek"
                 else saad_ground_impedance)
    cables = _as_sc_cables(system)
    p = system.n_conductors
    z = np.zeros((p, p), dtype=complex)
    lnk = 1j * omega * mu_0 / (2.0 * np.pi)

    for cab in cables:
        core = system.conductors[cab.core]
        sheath = system.conductors[cab.sheath]
        z_core = solid_internal_impedance_exact(
            cab.core_radius, core.material.sigma, core.material.mu, omega)
        tube = tubular_internal_impedance(
            cab.sheath_in, cab.sheath_out, sheath.material.sigma,
            sheath.material.mu, omega)
        z_g = ground_fn(LoopGeometry(cab.outer_radius, -cab.y, -cab.y),
                        system.ground.sigma, omega)
        z11 = z_core + lnk * np.log(cab.sheath_in / cab.core_radius) + tube.inner
        z22 = (tube.outer + lnk * np.log(cab.outer_radius / cab.sheath_out)
               + z_g)
        zt = tube.transfer
        z[cab.core, cab.core] = z11 + z22 - 2.0 * zt
        z[cab.core, cab.sheath] = z22 - zt
        z[cab.sheath, cab.core] = z22 - zt
        z[cab.sheath, cab.sheath] = z22

    for i, ci in enumerate(cables):
        for cj in cables[i + 1:]:
            zm = ground_fn(
                LoopGeometry(abs(ci.x - cj.x), -ci.y, -cj.y),
                system.ground.sigma, omega)
            for a in (ci.core, ci.sheath):
                for b in (cj.core, cj.sheath):
                    z[a, b] = zm
                    z[b, a] = zm
    return z
