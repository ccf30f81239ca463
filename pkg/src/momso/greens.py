"""Harmonic (Fourier-Galerkin) discretizations of the 2-D Green's functions.

Matrix entries follow the convention

    entry(m, n) = (1/2pi) int e^{-j m theta} (1/2pi) int K(r(theta), r'(theta'))
                  e^{+j n theta'} dtheta' dtheta

for kernels K between circular contours.  For the homogeneous Hankel kernel
(j/4) H2_0(k|r - r'|) every circle-pair case has a closed form through the
cylindrical addition theorems, which stays exact even when circles touch
(cables laid tangent).  The air/ground two-layer kernel adds a reflected
term that is evaluated as a single spectral integral with the angular
projections done analytically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as _sp
from scipy.constants import epsilon_0, mu_0

from . import _kernels
from .model import GroundModel
from .special import QuadratureSpec, adaptive_panel_quadrature

__all__ = [
    "GeometryError",
    "ContourRef",
    "default_theta_nodes",
    "homogeneous_harmonic_matrix",
    "homogeneous_harmonic_matrix_radial_derivative",
    "regular_wave_matrix",
    "two_layer_green",
    "two_layer_harmonic_matrix",
]


class GeometryError(ValueError):
    """Contour pair in a configuration the discretization cannot handle."""


@dataclass(frozen=True)
class ContourRef:
    """A circular source/observation contour."""

    kind: str  # "conductor-outer" | "conductor-inner" | "hole"
    x: float
    y: float
    radius: float
    order: int

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("contour radius must be > 0")
        if self.order < 0:
            raise ValueError("harmonic order must be >= 0")

    @property
    def size(self) -> int:
        return 2 * self.order + 1

    @property
    def harmonics(self) -> np.ndarray:
        return np.arange(-self.order, self.order + 1)


def default_theta_nodes(*orders: int) -> int:
    """Node count for angular quadrature: spectral accuracy with margin."""
    return max(64, 8 * (max(orders) + 1))


_RTOL = 1e-9


def _sgn(narr: np.ndarray) -> np.ndarray:
    # (-1)^n as float, valid for negative n.
    return np.where(narr % 2 == 0, 1.0, -1.0)


def _jv(narr: np.ndarray, z: complex) -> np.ndarray:
    return _sp.jv(narr, z)


def _h2(narr: np.ndarray, z: complex) -> np.ndarray:
    return _sp.hankel2(narr, z)


def _h2p(narr: np.ndarray, z: complex) -> np.ndarray:
    return 0.5 * (_sp.hankel2(narr - 1, z) - _sp.hankel2(narr + 1, z))


def _classify(obs: ContourRef, src: ContourRef):
    d = float(np.hypot(obs.x - src.x, obs.y - src.y))
    scale = obs.radius + src.radius
    tol = _RTOL * scale
    if d <= tol:
        if abs(obs.radius - src.radius) <= tol:
            return "self", d
        return "concentric", d
    if d >= obs.radius + src.radius - tol:
        return "exterior", d
    if d + src.radius < obs.radius - tol:
        return "src-inside", d
    if d + obs.radius < src.radius - tol:
        return "obs-inside", d
    return "overlap", d


def homogeneous_harmonic_matrix(
    obs: ContourRef, src: ContourRef, k: complex
) -> np.ndarray:
    """Harmonic matrix of the kernel (j/4) H2_0(k |r - r'|).

    Self and concentric pairs reduce to the diagonal J/H2 products; eccentric
    pairs use the addition-theorem translation entries, valid up to and
    including tangency.  Overlapping non-identical circles are a geometry
    error.
    """
    m = obs.harmonics
    n = src.harmonics
    case, d = _classify(obs, src)
    out = np.zeros((obs.size, src.size), dtype=complex)

    if case in ("self", "concentric"):
        r_in = min(obs.radius, src.radius)
        r_out = max(obs.radius, src.radius)
        common = np.arange(-min(obs.order, src.order),
                           min(obs.order, src.order) + 1)
        vals = 0.25j * _jv(common, k * r_in) * _h2(common, k * r_out)
        out[common + obs.order, common + src.order] = vals
        return out

    if case == "overlap":
        raise GeometryError(
            "overlapping non-identical contours have no harmonic kernel matrix"
        )

    phi = np.arctan2(obs.y - src.y, obs.x - src.x)  # angle of c_obs - c_src
    diff = n[None, :] - m[:, None]
    phase = np.exp(1j * diff * phi)

    if case == "exterior":
        out = 0.25j * (_jv(m, k * obs.radius)[:, None]
                       * _jv(n, k * src.radius)[None, :]
                       * _h2(diff, k * d) * phase)
        return out

    if case == "src-inside":
        psi = np.arctan2(src.y - obs.y, src.x - obs.x)
        phase = np.exp(1j * diff * psi)
        out = 0.25j * (_sgn(m)[:, None] * _sgn(n)[None, :]
                       * _h2(m, k * obs.radius)[:, None]
                       * _jv(n, k * src.radius)[None, :]
                       * _jv(diff, k * d) * phase)
        return out

    # obs-inside
    out = 0.25j * (_jv(m, k * obs.radius)[:, None]
                   * _h2(n, k * src.radius)[None, :]
                   * _jv(diff, k * d) * phase)
    return out


def homogeneous_harmonic_matrix_radial_derivative(
    obs: ContourRef, src: ContourRef, k: complex
) -> np.ndarray:
    """Harmonic matrix of d/d rho_obs [(j/4) H2_0(k |r - r'|)] at rho_obs.

    The source must lie strictly inside (or be concentric with) the
    observation circle; only the observation-radius factor differentiates.
    """
    m = obs.harmonics
    n = src.harmonics
    case, d = _classify(obs, src)
    out = np.zeros((obs.size, src.size), dtype=complex)

    if case in ("self", "concentric"):
        if src.radius > obs.radius + _RTOL * obs.radius:
            raise GeometryError("source contour outside observation contour")
        common = np.arange(-min(obs.order, src.order),
                           min(obs.order, src.order) + 1)
        vals = (0.25j * k * _jv(common, k * src.radius)
                * _h2p(common, k * obs.radius))
        out[common + obs.order, common + src.order] = vals
        return out

    if case != "src-inside":
        raise GeometryError("radial-derivative kernel needs the source "
                            "strictly inside the observation contour")

    diff = n[None, :] - m[:, None]
    psi = np.arctan2(src.y - obs.y, src.x - obs.x)
    phase = np.exp(1j * diff * psi)
    out = 0.25j * k * (_sgn(m)[:, None] * _sgn(n)[None, :]
                       * _h2p(m, k * obs.radius)[:, None]
                       * _jv(n, k * src.radius)[None, :]
                       * _jv(diff, k * d) * phase)
    return out


def regular_wave_matrix(
    contours: list[ContourRef], hole: ContourRef, k_hat: complex
) -> np.ndarray:
    """Evaluation matrix of the regular hole modes on conductor contours.

    Column n is the harmonic-m content, on each conductor contour, of the
    interior wave J_|n|(k_hat rho_hat) e^{j n theta_hat} expressed in
    hole-centered coordinates.
    """
    n = hole.harmonics
    sigma_n = np.where(n >= 0, 1.0, _sgn(n))
    blocks = []
    for c in contours:
        m = c.harmonics
        d = float(np.hypot(c.x - hole.x, c.y - hole.y))
        if d + c.radius >= hole.radius * (1.0 + _RTOL):
            raise GeometryError("conductor contour not inside the hole")
        if d <= _RTOL * hole.radius:
            blk = np.zeros((c.size, hole.size), dtype=complex)
            common = np.arange(-min(c.order, hole.order),
                               min(c.order, hole.order) + 1)
            blk[common + c.order, common + hole.order] = (
                sigma_n[common + hole.order] * _jv(common, k_hat * c.radius)
            )
            # sigma_n * J_n = J_|n| on the diagonal
        else:
            psi = np.arctan2(c.y - hole.y, c.x - hole.x)
            diff = n[None, :] - m[:, None]
            blk = (sigma_n[None, :] * _jv(m, k_hat * c.radius)[:, None]
                   * _jv(diff, k_hat * d) * np.exp(1j * diff * psi))
        blocks.append(blk)
    return np.vstack(blocks)


# --------------------------------------------------------------------------
# Two-layer (air/ground) kernel
# --------------------------------------------------------------------------


def _layer_k2(omega: float, ground: GroundModel) -> tuple[complex, complex]:
    kg2 = omega * mu_0 * (omega * ground.eps_r * epsilon_0 - 1j * ground.sigma)
    k02 = complex(omega * mu_0 * omega * epsilon_0)
    return kg2, k02


def _matched_layers(kg2: complex, k02: complex) -> bool:
    return kg2 == k02


def _spectral_breakpoints(kg_abs: float, dx: float, upper: float,
                          max_osc: int = 120) -> list[float]:
    pts = {0.0, upper}
    b = max(kg_abs, upper / 4096.0)
    for f in (0.25, 0.5, 1.0, 2.0, 4.0):
        if f * b < upper:
            pts.add(f * b)
    g = b
    while g < upper:
        pts.add(g)
        g *= 2.0
    if dx != 0.0:
        step = np.pi / abs(dx)
        n_osc = min(int(upper / step), max_osc)
        for i in range(1, n_osc + 1):
            pts.add(i * step)
    return sorted(pts)


def _reflected_point(dx: float, ysum: float, kg: complex, k02: complex,
                     spec: QuadratureSpec) -> complex:
    if ysum >= 0.0:
        raise GeometryError("two-layer kernel requires both points below y=0")

    def integrand(beta):
        env, _ = _kernels.reflected_spectrum(np.asarray(beta, float), kg, k02,
                                             ysum)
        return -(0.5 / np.pi) * np.cos(beta * dx) * env

    upper = (np.log(1.0 / spec.atol) + 7.0) / abs(ysum) + 3.0 * abs(kg)
    pts = _spectral_breakpoints(abs(kg), dx, upper)
    val, _err = adaptive_panel_quadrature(integrand, pts, spec)
    return complex(val)


def two_layer_green(x: float, y: float, xs: float, ys: float, omega: float,
                    ground: GroundModel,
                    spec: QuadratureSpec | None = None) -> complex:
    """Green's function of the air/ground half spaces, both points buried.

    Homogeneous part (j/4) H2_0(k_g R) in closed form plus the smooth
    reflected spectral integral; the two coincide with the full spectral
    representation of the layered medium.
    """
    if y >= 0.0 or ys >= 0.0:
        raise GeometryError("both points must lie below the interface y=0")
    r = float(np.hypot(x - xs, y - ys))
    if r == 0.0:
        raise GeometryError("coincident points: kernel is singular")
    spec = spec or QuadratureSpec()
    kg2, k02 = _layer_k2(omega, ground)
    kg = complex(np.sqrt(kg2))
    direct = 0.25j * complex(_sp.hankel2(0, kg * r))
    if _matched_layers(kg2, k02):
        return direct
    return direct + _reflected_point(x - xs, y + ys, kg, k02, spec)


def _reflected_block(obs: ContourRef, src: ContourRef, kg: complex,
                     k02: complex, spec: QuadratureSpec) -> np.ndarray:
    marr = obs.harmonics
    narr = src.harmonics
    ysum = obs.y + src.y
    dx = obs.x - src.x
    c_eff = -ysum - obs.radius - src.radius
    if c_eff <= 0.0:
        raise GeometryError("contour reaches the ground surface; the "
                            "reflected spectral integral does not decay")

    jm = _jv(marr, kg * obs.radius)
    jn = _jv(narr, kg * src.radius) * _sgn(narr)

    def integrand(beta):
        beta = np.asarray(beta, float)
        env, alpha = _kernels.reflected_spectrum(beta, kg, k02, ysum)
        row = jm[None, :] * alpha[:, None] ** marr[None, :]
        col = jn[None, :] * alpha[:, None] ** narr[None, :]
        ph = np.exp(-1j * beta * dx)
        fwd = (env * ph)[:, None, None] * row[:, :, None] * col[:, None, :]
        # beta -> -beta image of the same integrand (folded half line)
        rowb = jm[None, :] / (alpha[:, None] ** marr[None, :])
        colb = jn[None, :] / (alpha[:, None] ** narr[None, :])
        bwd = (env / ph)[:, None, None] * rowb[:, :, None] * colb[:, None, :]
        return -(0.25 / np.pi) * (fwd + bwd)

    # Truncation: e^{-c_eff beta} beats the polynomial growth of the
    # projection factors; iterate the bound to account for that growth.
    nmax = max(obs.order, src.order)
    abar = max(obs.radius, src.radius)
    upper = (np.log(1.0 / spec.atol) + 7.0) / c_eff
    for _ in range(4):
        upper = ((np.log(1.0 / spec.atol) + 7.0
                  + 2.0 * nmax * max(0.0, np.log(upper * abar))) / c_eff)
    upper += 3.0 * abs(kg)
    pts = _spectral_breakpoints(abs(kg), dx, upper)
    val, _err = adaptive_panel_quadrature(integrand, pts, spec)
    return val


def two_layer_harmonic_matrix(
    obs: ContourRef, src: ContourRef, omega: float, ground: GroundModel,
    spec: QuadratureSpec | None = None,
) -> np.ndarray:
    """Harmonic matrix of the two-layer kernel between buried contours.

    Splits into the homogeneous ground-medium matrix (closed forms,
    including the singular self term) plus the smooth reflected part
    integrated spectrally with analytic angular projections.
    """
    spec = spec or QuadratureSpec()
    kg2, k02 = _layer_k2(omega, ground)
    kg = complex(np.sqrt(kg2))
    out = homogeneous_harmonic_matrix(obs, src, kg)
    if _matched_layers(kg2, k02):
        return out
    return out + _reflected_block(obs, src, kg, k02, spec)
