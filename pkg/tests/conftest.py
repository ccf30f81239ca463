"""Shared fixtures: the three-cable test system and its variants."""

from pathlib import Path

import numpy as np
import pytest

from momso.model import (
    CableSystem,
    GroundModel,
    Hole,
    Material,
    SolidConductor,
    TubularConductor,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

# Single-core cable build: 39 mm copper core, 18.25 mm insulation,
# 0.22 mm sheath, 4.53 mm jacket.
CORE_RADIUS = 0.0195
SHEATH_IN = CORE_RADIUS + 0.01825
SHEATH_OUT = SHEATH_IN + 0.00022
JACKET_OUT = SHEATH_OUT + 0.00453
CORE_RHO = 3.365e-8
SHEATH_RHO = 1.718e-8

CORE_MAT = Material(sigma=1.0 / CORE_RHO)
SHEATH_MAT = Material(sigma=1.0 / SHEATH_RHO)
INSULATION = Material(eps_r=2.85)


def three_sc_system(spacing, depth=1.0, sigma_g=0.01, order=4,
                    hole_material=INSULATION,
                    frequencies=(50.0,)) -> CableSystem:
    """Three SC cables in a flat row, each in its own hole."""
    conductors, holes = [], []
    for i, xc in enumerate(np.array([-1.0, 0.0, 1.0]) * spacing):
        ident = f"cable{i + 1}"
        holes.append(Hole(ident, xc, -depth, JACKET_OUT, hole_material, order))
        conductors.append(
            SolidConductor(xc, -depth, CORE_RADIUS, CORE_MAT, order, ident))
        conductors.append(
            TubularConductor(xc, -depth, SHEATH_IN, SHEATH_OUT, SHEATH_MAT,
                             order, ident))
    return CableSystem(tuple(conductors), tuple(holes), GroundModel(sigma_g),
                       tuple(frequencies))


def tunnel_system(spacing=0.085, tunnel_radius=0.25, depth=1.0,
                  sigma_g=0.01, order=4, frequencies=(50.0,)) -> CableSystem:
    """The same three cables inside one air-filled tunnel."""
    conductors = []
    holes = (Hole("tunnel", 0.0, -depth, tunnel_radius, Material(), order),)
    for xc in np.array([-1.0, 0.0, 1.0]) * spacing:
        conductors.append(
            SolidConductor(xc, -depth, CORE_RADIUS, CORE_MAT, order, "tunnel"))
        conductors.append(
            TubularConductor(xc, -depth, SHEATH_IN, SHEATH_OUT, SHEATH_MAT,
                             order, "tunnel"))
    return CableSystem(tuple(conductors), holes, GroundModel(sigma_g),
                       tuple(frequencies))


SWEEP_31 = tuple(np.geomspace(1.0, 1e6, 31))

SCREENS = (1, 3, 5)   # sheath indices in config order c1 s1 c2 s2 c3 s3
CORES = (0, 2, 4)


@pytest.fixture(scope="session")
def s85():
    return three_sc_system(0.085, frequencies=SWEEP_31)


@pytest.fixture(scope="session")
def s2m():
    return three_sc_system(2.0, frequencies=SWEEP_31)


@pytest.fixture(scope="session")
def tunnel():
    return tunnel_system(frequencies=SWEEP_31)
