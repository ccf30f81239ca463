"""Built-in Green's-function oracle suite (the ``greens-check`` command).

Re-derives a sample of matrix entries by brute-force angular quadrature and
checks the closed-form/spectral production paths against them, plus the
matched-media identity and spectral-convergence gates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .greens import (
    ContourRef,
    default_theta_nodes,
    homogeneous_harmonic_matrix,
    two_layer_green,
    two_layer_harmonic_matrix,
)
from .model import CableSystem, GroundModel
from .special import QuadratureSpec

__all__ = ["CheckResult", "greens_oracle_suite"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _quad_matrix(obs: ContourRef, src: ContourRef, k: complex,
                 m_nodes: int) -> np.ndarray:
    th = 2.0 * np.pi * np.arange(m_nodes) / m_nodes
    xo = obs.x + obs.radius * np.cos(th)
    yo = obs.y + obs.radius * np.sin(th)
    xs = src.x + src.radius * np.cos(th)
    ys = src.y + src.radius * np.sin(th)
    r = np.hypot(xo[:, None] - xs[None, :], yo[:, None] - ys[None, :])
    ker = 0.25j * _sp.hankel2(0, k * r)
    em = np.exp(-1j * np.outer(obs.harmonics, th))
    en = np.exp(1j * np.outer(th, src.harmonics))
    return em @ ker @ en / m_nodes ** 2


def _sample_pair(system: CableSystem):
    # A representative disjoint eccentric pair from the system geometry, or a
    # synthetic one when the system has a single contour.
    if system.holes:
        h = system.holes[0]
        obs = ContourRef("hole", h.x, h.y, h.radius, min(h.order, 3))
        members = system.members_of(0)
        if members:
            c = system.conductors[members[0]]
            src = ContourRef("conductor-outer", c.x + 0.2 * h.radius, c.y,
                             0.25 * h.radius, min(c.order, 3))
            return obs, src
    c = system.conductors[0]
    r = c.outer_radius
    obs = ContourRef("conductor-outer", c.x, c.y, r, min(c.order, 3))
    src = ContourRef("conductor-outer", c.x + 3.0 * r, c.y - 2.0 * r,
                     0.8 * r, min(c.order, 3))
    return obs, src


def greens_oracle_suite(system: CableSystem,
                        frequency_hz: float | None = None) -> list[CheckResult]:
    """Run the oracle suite against the system's geometry; returns results."""
    f = frequency_hz or float(np.sqrt(system.frequencies[0]
                                      * system.frequencies[-1]))
    omega = 2.0 * np.pi * f
    ground = system.ground
    kg = ground.wavenumber(omega)
    results = []

    obs, src = _sample_pair(system)
    # keep the oracle pair safely separated so plain quadrature converges
    gap = np.hypot(obs.x - src.x, obs.y - src.y) - obs.radius - src.radius
    if abs(gap) < 0.05 * (obs.radius + src.radius):
        src = ContourRef(src.kind, src.x + 0.5 * (obs.radius + src.radius),
                         src.y, src.radius, src.order)

    m_nodes = default_theta_nodes(obs.order, src.order)
    closed = homogeneous_harmonic_matrix(obs, src, kg)
    quad = _quad_matrix(obs, src, kg, m_nodes)
    scale = np.max(np.abs(quad))
    err = np.max(np.abs(closed - quad)) / scale
    results.append(CheckResult(
        "homogeneous closed form vs angular quadrature", err < 1e-8,
        f"max rel dev {err:.2e} (gate 1e-8)"))

    quad2 = _quad_matrix(obs, src, kg, 2 * m_nodes)
    err = np.max(np.abs(quad2 - quad)) / scale
    results.append(CheckResult(
        "angular-quadrature node-doubling stability", err < 1e-9,
        f"max change {err:.2e} (gate 1e-9)"))

    g0 = GroundModel(sigma=0.0, eps_r=1.0)
    k0 = g0.wavenumber(omega)
    pts = [(0.03, -1.0, 0.0, -1.2), (0.5, -2.0, -0.3, -0.8),
           (0.0, -1.5, 0.0, -0.5)]
    worst = 0.0
    for x, y, xs, ys in pts:
        val = two_layer_green(x, y, xs, ys, omega, g0)
        ref = 0.25j * _sp.hankel2(0, k0 * np.hypot(x - xs, y - ys))
        worst = max(worst, abs(val - ref) / abs(ref))
    results.append(CheckResult(
        "matched-media two-layer kernel = homogeneous kernel", worst < 1e-10,
        f"max rel dev {worst:.2e} (gate 1e-10)"))

    worst = 0.0
    for x, y, xs, ys in pts:
        a = two_layer_green(x, y, xs, ys, omega, ground)
        b = two_layer_green(xs, ys, x, y, omega, ground)
        worst = max(worst, abs(a - b) / abs(a))
    results.append(CheckResult(
        "two-layer kernel reciprocity", worst < 1e-12,
        f"max rel dev {worst:.2e} (gate 1e-12)"))

    # reflected part of a harmonic block vs brute-force double quadrature
    o2 = ContourRef("hole", 0.0, -1.0, 0.04, 2)
    s2 = ContourRef("hole", 0.1, -1.1, 0.05, 2)
    spec = QuadratureSpec(rtol=1e-11, atol=1e-16)
    refl = (two_layer_harmonic_matrix(o2, s2, omega, ground, spec)
            - homogeneous_harmonic_matrix(o2, s2, kg))
    mq = 24
    th = 2.0 * np.pi * np.arange(mq) / mq
    vals = np.empty((mq, mq), dtype=complex)
    for i in range(mq):
        xo = o2.x + o2.radius * np.cos(th[i])
        yo = o2.y + o2.radius * np.sin(th[i])
        for j in range(mq):
            xs = s2.x + s2.radius * np.cos(th[j])
            ys = s2.y + s2.radius * np.sin(th[j])
            vals[i, j] = (two_layer_green(xo, yo, xs, ys, omega, ground, spec)
                          - 0.25j * _sp.hankel2(0, kg * np.hypot(xo - xs,
                                                                 yo - ys)))
    em = np.exp(-1j * np.outer(o2.harmonics, th))
    en = np.exp(1j * np.outer(th, s2.harmonics))
    brute = em @ vals @ en / mq ** 2
    err = np.max(np.abs(refl - brute)) / np.max(np.abs(brute))
    results.append(CheckResult(
        "reflected spectral block vs brute-force quadrature", err < 1e-7,
        f"max rel dev {err:.2e} (gate 1e-7)"))
    return results
