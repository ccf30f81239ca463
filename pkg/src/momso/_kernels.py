"""Hot numeric kernels with a numba backend and a pure-Python/numpy fallback.

The backend is chosen once at import time from the ``MOMSO_BACKEND``
environment variable: ``numba`` (default) JIT-compiles the kernels, ``numpy``
runs the plain interpreted versions.  Both backends produce identical values;
``bench/benchmark_backends.py`` times them against each other.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "ACTIVE_BACKEND",
    "cf1_bessel_ratio",
    "hankel1_logderiv_asymp",
    "reflected_spectrum",
    "PY_KERNELS",
    "JIT_KERNELS",
]

_TINY = 1e-290


def _cf1_bessel_ratio(nu, z, tol, max_iter):
    # J_{nu+1}(z)/J_nu(z) by the modified Lentz continued fraction with
    # partial denominators 2(nu+k)/z.  Needs O(|z|) terms; no intermediate
    # can overflow, which is the whole point of working with the ratio.
    f = _TINY + 0.0j
    c = f
    d = 0.0 + 0.0j
    k = 1
    while k <= max_iter:
        b = 2.0 * (nu + k) / z
        a = 1.0 + 0.0j if k == 1 else -1.0 + 0.0j
        d = b + a * d
        if d == 0.0 + 0.0j:
            d = _TINY + 0.0j
        c = b + a / c
        if c == 0.0 + 0.0j:
            c = _TINY + 0.0j
        d = 1.0 / d
        delta = c * d
        f = f * delta
        if abs(delta - 1.0) < tol:
            return f, k
        k += 1
    return f, -1


def _hankel1_logderiv_asymp(nu, z):
    # d/dz log H1_nu(z) from the large-argument series
    # H1_nu ~ sqrt(2/(pi z)) e^{j(z - nu pi/2 - pi/4)} * sum_l c_l,
    # c_l = c_{l-1} * j (4 nu^2 - (2l-1)^2) / (8 z l).
    # Returns (value, ok); ok is False when the series failed to settle,
    # in which case the caller must fall back to the continued fraction.
    four_nu2 = 4.0 * nu * nu
    c = 1.0 + 0.0j
    s = c
    sp = 0.0 + 0.0j
    prev = abs(c)
    ok = False
    for l in range(1, 64):
        c = c * (1j * (four_nu2 - (2.0 * l - 1.0) ** 2) / (8.0 * z * l))
        mag = abs(c)
        if mag > prev:
            break
        s = s + c
        sp = sp - l * c / z
        prev = mag
        if mag < 1e-17 * abs(s):
            ok = True
            break
    val = 1j - 0.5 / z + sp / s
    return val, ok


def _reflected_spectrum(beta, kg, k02, ysum):
    # Per spectral node: R_TM(beta)/gamma * exp(gamma*ysum) and the angular
    # projection base alpha = -j(beta + gamma)/kg, gamma = sqrt(beta^2-kg^2)
    # with Re(gamma) >= 0.
    n = beta.shape[0]
    env = np.empty(n, np.complex128)
    alpha = np.empty(n, np.complex128)
    kg2 = kg * kg
    for i in range(n):
        b = beta[i]
        g = np.sqrt(b * b - kg2)
        g0 = np.sqrt(b * b - k02)
        env[i] = (g - g0) / ((g + g0) * g) * np.exp(g * ysum)
        alpha[i] = -1j * (b + g) / kg
    return env, alpha


PY_KERNELS = {
    "cf1_bessel_ratio": _cf1_bessel_ratio,
    "hankel1_logderiv_asymp": _hankel1_logderiv_asymp,
    "reflected_spectrum": _reflected_spectrum,
}

JIT_KERNELS = {}

_requested = os.environ.get("MOMSO_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(
        f"MOMSO_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

ACTIVE_BACKEND = "numpy"
if _requested == "numba":
    try:
        import numba

        for _name, _fn in PY_KERNELS.items():
            JIT_KERNELS[_name] = numba.njit(cache=True)(_fn)
        ACTIVE_BACKEND = "numba"
    except ImportError:
        pass

_active = JIT_KERNELS if ACTIVE_BACKEND == "numba" else PY_KERNELS

cf1_bessel_ratio = _active["cf1_bessel_ratio"]
hankel1_logderiv_asymp = _active["hankel1_logderiv_asymp"]
reflected_spectrum = _active["reflected_spectrum"]
