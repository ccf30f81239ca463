"""Screen reductions, sequence impedances, sweep orchestration and CSV I/O."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import CableSystem
from .reference import cable_constants_impedance
from .solver import solve_frequency
from .special import QuadratureSpec

__all__ = [
    "ReducedImpedance",
    "SequenceResult",
    "SweepReport",
    "reduce_grounded",
    "reduce_open",
    "sequence_impedances",
    "run_sweep",
    "compare_report",
    "emit_csv",
    "parse_csv",
]


@dataclass(frozen=True)
class ReducedImpedance:
    """Impedance matrix after grounding or opening a subset of conductors."""

    z: np.ndarray
    retained: tuple[int, ...]  # original conductor indices, ascending


@dataclass(frozen=True)
class SequenceResult:
    """Zero- and positive-sequence impedances of a three-phase block."""

    z0: complex
    z1: complex


def _check_subset(p: int, subset: Sequence[int], name: str) -> tuple[int, ...]:
    s = tuple(sorted(set(int(i) for i in subset)))
    if not s:
        raise ValueError(f"{name} set must be nonempty")
    if s[0] < 0 or s[-1] >= p:
        raise ValueError(f"{name} indices out of range 0..{p - 1}")
    if len(s) >= p:
        raise ValueError(f"{name} set must be a proper subset")
    return s


def reduce_grounded(z: np.ndarray, grounded: Sequence[int]) -> ReducedImpedance:
    """Eliminate ideally grounded conductors by the Schur complement.

    Z' = Z_kk - Z_kG Z_GG^{-1} Z_Gk over the retained set k.
    """
    p = z.shape[0]
    g = _check_subset(p, grounded, "grounded")
    k = tuple(i for i in range(p) if i not in g)
    zgg = z[np.ix_(g, g)]
    try:
        x = np.linalg.solve(zgg, z[np.ix_(g, k)])
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"grounded block singular: {exc}") from exc
    zr = z[np.ix_(k, k)] - z[np.ix_(k, g)] @ x
    return ReducedImpedance(z=zr, retained=k)


def reduce_open(z: np.ndarray, opened: Sequence[int]) -> ReducedImpedance:
    """Drop open (zero-current) conductors: plain submatrix."""
    p = z.shape[0]
    o = _check_subset(p, opened, "open")
    k = tuple(i for i in range(p) if i not in o)
    return ReducedImpedance(z=z[np.ix_(k, k)], retained=k)


_A_FORTESCUE = None


def _fortescue() -> np.ndarray:
    global _A_FORTESCUE
    if _A_FORTESCUE is None:
        a = np.exp(2j * np.pi / 3.0)
        _A_FORTESCUE = np.array([[1, 1, 1], [1, a * a, a], [1, a, a * a]],
                                dtype=complex)
    return _A_FORTESCUE


def sequence_impedances(z: np.ndarray) -> SequenceResult:
    """Fortescue transform of a 3x3 phase impedance matrix.

    Returns the diagonal zero/positive-sequence entries of A^{-1} Z A; for a
    balanced matrix with self s and mutual m these are s+2m and s-m.  Phase
    order is conductor config order.
    """
    if z.shape != (3, 3):
        raise ValueError("sequence transform needs a 3x3 matrix")
    a = _fortescue()
    zs = np.linalg.solve(a, z @ a)
    return SequenceResult(z0=complex(zs[0, 0]), z1=complex(zs[1, 1]))


@dataclass
class SweepReport:
    """Tabulated sweep results, one row per frequency.

    ``momso_z``/``analytic_z`` hold the full P x P complex matrices (ohm/m);
    reduced and sequence results are computed from whichever of the two the
    sweep ran (surface-operator results when mode includes it).  Frequencies
    with a numerical failure are recorded and skipped in the tables.
    """

    frequencies: np.ndarray
    mode: str
    conductor_count: int
    momso_z: list[Optional[np.ndarray]] = field(default_factory=list)
    analytic_z: list[Optional[np.ndarray]] = field(default_factory=list)
    reduced: list[Optional[ReducedImpedance]] = field(default_factory=list)
    sequence: list[Optional[SequenceResult]] = field(default_factory=list)
    wall_times: list[float] = field(default_factory=list)
    failures: dict[int, str] = field(default_factory=dict)
    reduction: Optional[tuple[str, tuple[int, ...]]] = None

    @property
    def ok(self) -> bool:
        return not self.failures


def run_sweep(system: CableSystem, mode: str = "momso",
              reduction: Optional[tuple[str, Sequence[int]]] = None,
              sequence: bool = False, workers: int = 1,
              quad: QuadratureSpec | None = None) -> SweepReport:
    """Evaluate the impedance over the system's frequency grid.

    mode: "momso", "analytic" (cable-constant formulas) or "both".
    reduction: ("grounded", ids) or ("open", ids), conductor indices 0-based.
    Frequencies are dispatched to a worker pool; failures at single
    frequencies are recorded without aborting the rest, and the report is
    assembled in frequency order regardless of completion order.
    """
    if mode not in ("momso", "analytic", "both"):
        raise ValueError("mode must be momso, analytic or both")
    freqs = np.asarray(system.frequencies)
    p = system.n_conductors
    red = None
    if reduction is not None:
        kind, ids = reduction
        if kind not in ("grounded", "open"):
            raise ValueError("reduction kind must be 'grounded' or 'open'")
        red = (kind, _check_subset(p, ids, kind))

    report = SweepReport(frequencies=freqs, mode=mode, conductor_count=p,
                         reduction=red)

    def one(i: int):
        f = float(freqs[i])
        t0 = time.perf_counter()
        zm = za = None
        if mode in ("momso", "both"):
            r, l = solve_frequency(system, f, quad)
            zm = r + 1j * (2.0 * np.pi * f) * l
        if mode in ("analytic", "both"):
            za = cable_constants_impedance(system, 2.0 * np.pi * f)
        return zm, za, time.perf_counter() - t0

    results: list = [None] * len(freqs)
    if workers <= 1:
        for i in range(len(freqs)):
            try:
                results[i] = one(i)
            except Exception as exc:  # noqa: BLE001 - recorded per frequency
                results[i] = exc
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = {i: pool.submit(one, i) for i in range(len(freqs))}
            for i, fut in futs.items():
                try:
                    results[i] = fut.result()
                except Exception as exc:  # noqa: BLE001
                    results[i] = exc

    for i, res in enumerate(results):
        if isinstance(res, Exception):
            report.failures[i] = f"{type(res).__name__}: {res}"
            report.momso_z.append(None)
            report.analytic_z.append(None)
            report.reduced.append(None)
            report.sequence.append(None)
            report.wall_times.append(float("nan"))
            continue
        zm, za, dt = res
        report.momso_z.append(zm)
        report.analytic_z.append(za)
        report.wall_times.append(dt)
        z = zm if zm is not None else za
        rr = None
        if red is not None:
            rr = (reduce_grounded(z, red[1]) if red[0] == "grounded"
                  else reduce_open(z, red[1]))
        report.reduced.append(rr)
        if sequence:
            zseq_src = rr.z if rr is not None else z
            report.sequence.append(sequence_impedances(zseq_src))
        else:
            report.sequence.append(None)
    return report


def compare_report(momso_z: list[np.ndarray], analytic_z: list[np.ndarray],
                   frequencies: np.ndarray) -> dict:
    """Per-frequency relative deviation of R and L between the two routes."""
    if len(momso_z) != len(analytic_z) or len(momso_z) != len(frequencies):
        raise ValueError("frequency grids do not match")
    rows = []
    for f, zm, za in zip(frequencies, momso_z, analytic_z):
        om = 2.0 * np.pi * f
        dev_r = np.abs(zm.real - za.real) / np.maximum(np.abs(zm.real), 1e-300)
        dev_l = (np.abs(zm.imag - za.imag) / om
                 / np.maximum(np.abs(zm.imag) / om, 1e-300))
        rows.append({"f_hz": float(f),
                     "max_dev_r": float(dev_r.max()),
                     "max_dev_l": float(dev_l.max())})
    all_r = [r["max_dev_r"] for r in rows]
    all_l = [r["max_dev_l"] for r in rows]
    return {"rows": rows,
            "summary": {"max_dev_r": max(all_r), "median_dev_r": float(np.median(all_r)),
                        "max_dev_l": max(all_l), "median_dev_l": float(np.median(all_l))}}


def _fmt(x: float) -> str:
    return format(x, ".17e")


def emit_csv(report: SweepReport) -> str:
    """One row per frequency; full double precision for bit-exact diffing.

    Columns: f_hz, row-major R entries (ohm_per_m), row-major L entries
    (henry_per_m), then reduced/sequence/comparison columns when present.
    Failed frequencies emit 'nan' fields.
    """
    p = report.conductor_count
    cols = ["f_hz"]
    cols += [f"r_{i + 1}_{j + 1}" for i in range(p) for j in range(p)]
    cols += [f"l_{i + 1}_{j + 1}" for i in range(p) for j in range(p)]
    pr = None
    if report.reduction is not None:
        some = next((r for r in report.reduced if r is not None), None)
        pr = len(some.retained) if some is not None else 0
        cols += [f"rred_{i + 1}_{j + 1}" for i in range(pr) for j in range(pr)]
        cols += [f"lred_{i + 1}_{j + 1}" for i in range(pr) for j in range(pr)]
    has_seq = any(s is not None for s in report.sequence)
    if has_seq:
        cols += ["seq_r0", "seq_l0", "seq_r1", "seq_l1"]
    both = report.mode == "both"
    if both:
        cols += ["dev_r_max", "dev_l_max"]

    lines = [",".join(cols)]
    for i, f in enumerate(report.frequencies):
        om = 2.0 * np.pi * float(f)
        z = report.momso_z[i] if report.momso_z[i] is not None \
            else report.analytic_z[i]
        row = [_fmt(float(f))]
        if z is None:
            row += ["nan"] * (len(cols) - 1)
            lines.append(",".join(row))
            continue
        row += [_fmt(z[a, b].real) for a in range(p) for b in range(p)]
        row += [_fmt(z[a, b].imag / om) for a in range(p) for b in range(p)]
        if pr is not None:
            rr = report.reduced[i]
            row += [_fmt(rr.z[a, b].real) for a in range(pr) for b in range(pr)]
            row += [_fmt(rr.z[a, b].imag / om)
                    for a in range(pr) for b in range(pr)]
        if has_seq:
            s = report.sequence[i]
            row += [_fmt(s.z0.real), _fmt(s.z0.imag / om),
                    _fmt(s.z1.real), _fmt(s.z1.imag / om)]
        if both:
            zm, za = report.momso_z[i], report.analytic_z[i]
            dev_r = float(np.max(np.abs(zm.real - za.real)
                                 / np.maximum(np.abs(zm.real), 1e-300)))
            dev_l = float(np.max(np.abs(zm.imag - za.imag)
                                 / np.maximum(np.abs(zm.imag), 1e-300)))
            row += [_fmt(dev_r), _fmt(dev_l)]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> dict:
    """Parse an emitted CSV back into frequencies and R/L matrix lists."""
    lines = [ln for ln in text.strip().splitlines() if ln]
    header = lines[0].split(",")
    r_cols = [c for c in header if c.startswith("r_")]
    p = int(round(np.sqrt(len(r_cols))))
    if p * p != len(r_cols):
        raise ValueError("malformed header: R block not square")
    freqs, rs, ls = [], [], []
    for ln in lines[1:]:
        vals = ln.split(",")
        freqs.append(float(vals[0]))
        r = np.array([float(v) for v in vals[1:1 + p * p]]).reshape(p, p)
        l = np.array([float(v)
                      for v in vals[1 + p * p:1 + 2 * p * p]]).reshape(p, p)
        rs.append(r)
        ls.append(l)
    return {"frequencies": np.array(freqs), "resistance": rs, "inductance": ls}
