"""Domain types, configuration parsing and geometric validation.

Everything is SI internally: meters, S/m, Hz.  Resistivity is accepted in
config files and inverted at parse time.  A parsed ``CableSystem`` is
immutable and safe to share across worker threads.
"""

from __future__ import annotations

import sys as _sys
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.constants import epsilon_0, mu_0

if _sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

__all__ = [
    "ConfigError",
    "Material",
    "SolidConductor",
    "TubularConductor",
    "Hole",
    "GroundModel",
    "CableSystem",
    "ValidationIssue",
    "ValidationReport",
    "parse_config",
    "serialize_config",
    "validate_geometry",
    "override_orders",
    "COPPER_LIKE",
    "LOSSLESS_AIR",
]

DEFAULT_ORDER = 4


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration documents."""


@dataclass(frozen=True)
class Material:
    """Homogeneous isotropic material: conductivity, relative mu/eps."""

    sigma: float = 0.0
    mu_r: float = 1.0
    eps_r: float = 1.0

    def __post_init__(self):
        for name in ("sigma", "mu_r", "eps_r"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.sigma < 0.0:
            raise ValueError("conductivity must be >= 0")
        if self.mu_r <= 0.0 or self.eps_r <= 0.0:
            raise ValueError("mu_r and eps_r must be > 0")

    @property
    def mu(self) -> float:
        return self.mu_r * mu_0

    @property
    def eps(self) -> float:
        return self.eps_r * epsilon_0

    def wavenumber(self, omega: float) -> complex:
        """k = sqrt(omega*mu*(omega*eps - j*sigma)), Re k >= 0, Im k <= 0."""
        k2 = omega * self.mu * (omega * self.eps - 1j * self.sigma)
        return complex(np.sqrt(k2))


COPPER_LIKE = Material(sigma=5.8e7)
LOSSLESS_AIR = Material()


@dataclass(frozen=True)
class SolidConductor:
    x: float
    y: float
    radius: float
    material: Material
    order: int = DEFAULT_ORDER
    hole: Optional[str] = None

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("conductor radius must be > 0")
        if self.order < 0:
            raise ValueError("harmonic order must be >= 0")

    @property
    def outer_radius(self) -> float:
        return self.radius


@dataclass(frozen=True)
class TubularConductor:
    x: float
    y: float
    inner_radius: float
    outer_radius: float
    material: Material
    order: int = DEFAULT_ORDER
    hole: Optional[str] = None

    def __post_init__(self):
        if not 0.0 < self.inner_radius < self.outer_radius:
            raise ValueError("tube requires 0 < inner_radius < outer_radius")
        if self.order < 0:
            raise ValueError("harmonic order must be >= 0")


Conductor = SolidConductor | TubularConductor


@dataclass(frozen=True)
class Hole:
    """Circular cavity in the ground containing zero or more conductors.

    The interior is normally a lossless dielectric; a conductive interior is
    accepted (it is what the matched-medium degeneracy checks use) and is
    flagged by validation as a warning.
    """

    ident: str
    x: float
    y: float
    radius: float
    material: Material = LOSSLESS_AIR
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("hole radius must be > 0")
        if self.order < 0:
            raise ValueError("harmonic order must be >= 0")


@dataclass(frozen=True)
class GroundModel:
    """Lossy half space below y = 0; air above.  Both share mu_0."""

    sigma: float
    eps_r: float = 1.0

    def __post_init__(self):
        if self.sigma < 0.0 or not np.isfinite(self.sigma):
            raise ValueError("ground conductivity must be >= 0 and finite")
        if self.eps_r <= 0.0:
            raise ValueError("eps_r must be > 0")

    @property
    def material(self) -> Material:
        return Material(sigma=self.sigma, eps_r=self.eps_r)

    def wavenumber(self, omega: float) -> complex:
        return self.material.wavenumber(omega)

    @staticmethod
    def air_wavenumber(omega: float) -> complex:
        return complex(omega * np.sqrt(mu_0 * epsilon_0))


@dataclass(frozen=True)
class CableSystem:
    """Full problem description: conductors, holes, ground, frequency grid."""

    conductors: tuple[Conductor, ...]
    holes: tuple[Hole, ...]
    ground: GroundModel
    frequencies: tuple[float, ...]

    def __post_init__(self):
        if len(self.conductors) < 1:
            raise ValueError("P >= 1 required: at least one conductor")
        ids = [h.ident for h in self.holes]
        if len(set(ids)) != len(ids):
            raise ValueError("hole identifiers must be unique")
        known = set(ids)
        for c in self.conductors:
            if c.hole is not None and c.hole not in known:
                raise ValueError(f"conductor references unknown hole {c.hole!r}")
        if len(self.frequencies) < 1:
            raise ValueError("at least one frequency required")
        f = np.asarray(self.frequencies)
        if not (np.all(f > 0.0) and np.all(np.isfinite(f))):
            raise ValueError("frequencies must be finite and strictly > 0")
        if np.any(np.diff(f) <= 0.0):
            raise ValueError("frequencies must be strictly increasing")

    @property
    def n_conductors(self) -> int:
        return len(self.conductors)

    def hole_index(self, ident: str) -> int:
        for i, h in enumerate(self.holes):
            if h.ident == ident:
                return i
        raise KeyError(ident)

    def members_of(self, hole_index: int) -> tuple[int, ...]:
        ident = self.holes[hole_index].ident
        return tuple(
            i for i, c in enumerate(self.conductors) if c.hole == ident
        )

    def direct_conductors(self) -> tuple[int, ...]:
        return tuple(
            i for i, c in enumerate(self.conductors) if c.hole is None
        )


def override_orders(
    sys_: CableSystem,
    conductor_order: Optional[int] = None,
    hole_order: Optional[int] = None,
) -> CableSystem:
    """Copy of the system with all harmonic truncation orders replaced.

    Used by convergence studies; geometry and materials are untouched.
    """
    conductors = tuple(
        replace(c, order=conductor_order) if conductor_order is not None else c
        for c in sys_.conductors
    )
    holes = tuple(
        replace(h, order=hole_order) if hole_order is not None else h
        for h in sys_.holes
    )
    return replace(sys_, conductors=conductors, holes=holes)


# --------------------------------------------------------------------------
# Configuration document handling
# --------------------------------------------------------------------------

_GROUND_KEYS = {"sigma_g", "eps_r"}
_SWEEP_KEYS = {"f_min", "f_max", "points", "spacing"}
_HOLE_KEYS = {"id", "center_x", "center_y", "radius", "n_hat",
              "eps_r", "mu_r", "sigma"}
_CONDUCTOR_KEYS = {"type", "center_x", "center_y", "radius", "inner_radius",
                   "outer_radius", "resistivity", "conductivity", "mu_r",
                   "eps_r", "n_p", "hole"}
_TOP_KEYS = {"ground", "sweep", "hole", "conductor"}


def _reject_unknown(table: dict, allowed: set, where: str):
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in {where}; "
            f"allowed: {sorted(allowed)}"
        )


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing mandatory key {key!r} in {where}")
    return table[key]


def _number(value, key: str, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: {key} must be a number, got {value!r}")
    return float(value)


def _positive(value, key: str, where: str) -> float:
    v = _number(value, key, where)
    if v <= 0.0 or not np.isfinite(v):
        raise ConfigError(f"{where}: {key} must be finite and > 0, got {v!r}")
    return v


def parse_config(text: str) -> CableSystem:
    """Parse a configuration document into a CableSystem.

    The document is TOML with sections ``[ground]``, ``[sweep]``, zero or
    more ``[[hole]]`` tables and one or more ``[[conductor]]`` tables; see
    the README for the full schema.  Unknown keys are rejected.
    """
    try:
        doc = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"syntax error: {exc}") from exc

    _reject_unknown(doc, _TOP_KEYS, "top level")

    ground_tbl = _require(doc, "ground", "document")
    _reject_unknown(ground_tbl, _GROUND_KEYS, "[ground]")
    sigma_g = _number(_require(ground_tbl, "sigma_g", "[ground]"),
                      "sigma_g", "[ground]")
    if sigma_g < 0.0:
        raise ConfigError("[ground]: sigma_g must be >= 0")
    ground = GroundModel(
        sigma=sigma_g,
        eps_r=_positive(ground_tbl.get("eps_r", 1.0), "eps_r", "[ground]"),
    )

    sweep_tbl = _require(doc, "sweep", "document")
    _reject_unknown(sweep_tbl, _SWEEP_KEYS, "[sweep]")
    f_min = _positive(_require(sweep_tbl, "f_min", "[sweep]"), "f_min", "[sweep]")
    f_max = _positive(_require(sweep_tbl, "f_max", "[sweep]"), "f_max", "[sweep]")
    points = _require(sweep_tbl, "points", "[sweep]")
    if isinstance(points, bool) or not isinstance(points, int) or points < 1:
        raise ConfigError("[sweep]: points must be a positive integer")
    spacing = sweep_tbl.get("spacing", "log")
    if spacing not in ("log", "linear"):
        raise ConfigError("[sweep]: spacing must be 'log' or 'linear'")
    if f_max < f_min:
        raise ConfigError("[sweep]: f_max must be >= f_min")
    if points == 1:
        freqs = np.array([f_min])
    elif spacing == "log":
        freqs = np.geomspace(f_min, f_max, points)
    else:
        freqs = np.linspace(f_min, f_max, points)

    holes = []
    for i, tbl in enumerate(doc.get("hole", [])):
        where = f"[[hole]] #{i + 1}"
        _reject_unknown(tbl, _HOLE_KEYS, where)
        ident = tbl.get("id", f"hole{i + 1}")
        if not isinstance(ident, str):
            raise ConfigError(f"{where}: id must be a string")
        holes.append(Hole(
            ident=ident,
            x=_number(_require(tbl, "center_x", where), "center_x", where),
            y=_number(_require(tbl, "center_y", where), "center_y", where),
            radius=_positive(_require(tbl, "radius", where), "radius", where),
            material=Material(
                sigma=max(0.0, _number(tbl.get("sigma", 0.0), "sigma", where)),
                mu_r=_positive(tbl.get("mu_r", 1.0), "mu_r", where),
                eps_r=_positive(tbl.get("eps_r", 1.0), "eps_r", where),
            ),
            order=_parse_order(tbl.get("n_hat", DEFAULT_ORDER), "n_hat", where),
        ))

    conductors = []
    cond_tables = doc.get("conductor", [])
    if not cond_tables:
        raise ConfigError("P >= 1 required: at least one [[conductor]]")
    for i, tbl in enumerate(cond_tables):
        where = f"[[conductor]] #{i + 1}"
        _reject_unknown(tbl, _CONDUCTOR_KEYS, where)
        ctype = _require(tbl, "type", where)
        if ctype not in ("solid", "tube"):
            raise ConfigError(f"{where}: type must be 'solid' or 'tube'")
        if "resistivity" in tbl and "conductivity" in tbl:
            raise ConfigError(f"{where}: give resistivity or conductivity, not both")
        if "resistivity" in tbl:
            sigma = 1.0 / _positive(tbl["resistivity"], "resistivity", where)
        elif "conductivity" in tbl:
            sigma = _positive(tbl["conductivity"], "conductivity", where)
        else:
            raise ConfigError(f"{where}: resistivity or conductivity required")
        mat = Material(
            sigma=sigma,
            mu_r=_positive(tbl.get("mu_r", 1.0), "mu_r", where),
            eps_r=_positive(tbl.get("eps_r", 1.0), "eps_r", where),
        )
        hole_ref = tbl.get("hole")
        if hole_ref in ("none", ""):
            hole_ref = None
        if hole_ref is not None and not isinstance(hole_ref, str):
            raise ConfigError(f"{where}: hole must be a hole id string or 'none'")
        common = dict(
            x=_number(_require(tbl, "center_x", where), "center_x", where),
            y=_number(_require(tbl, "center_y", where), "center_y", where),
            material=mat,
            order=_parse_order(tbl.get("n_p", DEFAULT_ORDER), "n_p", where),
            hole=hole_ref,
        )
        if ctype == "solid":
            if "inner_radius" in tbl or "outer_radius" in tbl:
                raise ConfigError(f"{where}: solid conductors take 'radius' only")
            conductors.append(SolidConductor(
                radius=_positive(_require(tbl, "radius", where), "radius", where),
                **common,
            ))
        else:
            if "radius" in tbl:
                raise ConfigError(
                    f"{where}: tubes take inner_radius/outer_radius, not radius"
                )
            b_in = _positive(_require(tbl, "inner_radius", where),
                             "inner_radius", where)
            b_out = _positive(_require(tbl, "outer_radius", where),
                              "outer_radius", where)
            if b_in >= b_out:
                raise ConfigError(f"{where}: inner_radius must be < outer_radius")
            conductors.append(TubularConductor(
                inner_radius=b_in, outer_radius=b_out, **common,
            ))

    try:
        return CableSystem(
            conductors=tuple(conductors),
            holes=tuple(holes),
            ground=ground,
            frequencies=tuple(float(f) for f in freqs),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_order(value, key, where) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ConfigError(f"{where}: {key} must be an integer >= 0")
    return value


def _ftoml(x) -> str:
    """Float literal that TOML accepts and that round-trips exactly."""
    s = format(float(x), ".17g")
    if not any(c in s for c in ".eE"):
        s += ".0"
    return s


def serialize_config(sys_: CableSystem) -> str:
    """Emit a configuration document that parses back to an equal system."""
    out = ["[ground]"]
    out.append(f"sigma_g = {_ftoml(sys_.ground.sigma)}")
    out.append(f"eps_r = {_ftoml(sys_.ground.eps_r)}")
    out.append("")
    out.append("[sweep]")
    f = np.asarray(sys_.frequencies)
    out.append(f"f_min = {_ftoml(f[0])}")
    out.append(f"f_max = {_ftoml(f[-1])}")
    out.append(f"points = {len(f)}")
    spacing = "log"
    if len(f) > 2:
        if np.allclose(np.diff(f), f[1] - f[0], rtol=1e-12, atol=0.0):
            spacing = "linear"
    out.append(f'spacing = "{spacing}"')
    for h in sys_.holes:
        out.append("")
        out.append("[[hole]]")
        out.append(f'id = "{h.ident}"')
        out.append(f"center_x = {_ftoml(h.x)}")
        out.append(f"center_y = {_ftoml(h.y)}")
        out.append(f"radius = {_ftoml(h.radius)}")
        out.append(f"n_hat = {h.order}")
        out.append(f"sigma = {_ftoml(h.material.sigma)}")
        out.append(f"mu_r = {_ftoml(h.material.mu_r)}")
        out.append(f"eps_r = {_ftoml(h.material.eps_r)}")
    for c in sys_.conductors:
        out.append("")
        out.append("[[conductor]]")
        if isinstance(c, SolidConductor):
            out.append('type = "solid"')
        else:
            out.append('type = "tube"')
        out.append(f"center_x = {_ftoml(c.x)}")
        out.append(f"center_y = {_ftoml(c.y)}")
        if isinstance(c, SolidConductor):
            out.append(f"radius = {_ftoml(c.radius)}")
        else:
            out.append(f"inner_radius = {_ftoml(c.inner_radius)}")
            out.append(f"outer_radius = {_ftoml(c.outer_radius)}")
        out.append(f"conductivity = {_ftoml(c.material.sigma)}")
        out.append(f"mu_r = {_ftoml(c.material.mu_r)}")
        out.append(f"eps_r = {_ftoml(c.material.eps_r)}")
        out.append(f"n_p = {c.order}")
        if c.hole is not None:
            out.append(f'hole = "{c.hole}"')
    out.append("")
    return "\n".join(out)


# --------------------------------------------------------------------------
# Geometric validation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationIssue:
    severity: str  # "error" | "warning"
    message: str
    entity: str


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = field(default_factory=list)

    def add(self, severity: str, message: str, entity: str):
        self.issues.append(ValidationIssue(severity, message, entity))

    @property
    def errors(self) -> list[ValidationIssue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def is_valid(self) -> bool:
        return not self.errors

    def __str__(self) -> str:
        if not self.issues:
            return "geometry OK"
        return "\n".join(
            f"{i.severity.upper()}: {i.message} [{i.entity}]" for i in self.issues
        )


def _dist(ax, ay, bx, by) -> float:
    return float(np.hypot(ax - bx, ay - by))


# Relative slack so that exactly tangent circles (cables laid touching)
# are accepted while genuine overlaps are rejected.
_GEOM_RTOL = 1e-9


def validate_geometry(sys_: CableSystem) -> ValidationReport:
    """Check every geometric assumption the solver relies on.

    A report with no error entries means the system is solvable; warnings
    are informational (e.g. a conductive hole interior).
    """
    rep = ValidationReport()

    if sys_.ground.sigma <= 0.0:
        rep.add("error", "ground conductivity must be > 0 to solve", "ground")

    for hi, h in enumerate(sys_.holes):
        tag = f"hole {h.ident}"
        if h.y + h.radius >= 0.0:
            rep.add("error",
                    f"hole crosses the ground surface (y+radius = {h.y + h.radius:g})",
                    tag)
        if h.material.sigma > 0.0:
            rep.add("warning", "hole interior is conductive", tag)
        for hj in range(hi + 1, len(sys_.holes)):
            g = sys_.holes[hj]
            gap = _dist(h.x, h.y, g.x, g.y) - (h.radius + g.radius)
            if gap < -_GEOM_RTOL * (h.radius + g.radius):
                rep.add("error", f"holes overlap (gap {gap:g} m)",
                        f"{tag} / hole {g.ident}")

    for ci, c in enumerate(sys_.conductors):
        tag = f"conductor {ci + 1}"
        if c.hole is None:
            if c.y + c.outer_radius >= 0.0:
                rep.add("error", "direct-buried conductor must lie strictly "
                                 "below the ground surface", tag)
        else:
            h = sys_.holes[sys_.hole_index(c.hole)]
            margin = h.radius - (_dist(c.x, c.y, h.x, h.y) + c.outer_radius)
            if margin <= 0.0:
                rep.add("error",
                        f"conductor not strictly inside hole {c.hole!r} "
                        f"(margin {margin:g} m)", tag)

    for ci in range(len(sys_.conductors)):
        for cj in range(ci + 1, len(sys_.conductors)):
            a, b = sys_.conductors[ci], sys_.conductors[cj]
            if a.hole != b.hole:
                continue  # cross-hole/direct separation follows from hole checks
            d = _dist(a.x, a.y, b.x, b.y)
            slack = _GEOM_RTOL * (a.outer_radius + b.outer_radius)
            if d >= a.outer_radius + b.outer_radius - slack:
                continue  # disjoint (tangency allowed)
            nested = False
            for big, small in ((a, b), (b, a)):
                if isinstance(big, TubularConductor):
                    if d + small.outer_radius < big.inner_radius + slack:
                        nested = True
            if not nested:
                rep.add("error", "conductors overlap",
                        f"conductor {ci + 1} / conductor {cj + 1}")

    in_holes = sum(1 for c in sys_.conductors if c.hole is not None)
    if 0 < in_holes < len(sys_.conductors):
        rep.add("error",
                "mixed direct-buried and in-hole conductors are not supported "
                "by the solver; use all-hole or all-direct layouts", "system")

    return rep
