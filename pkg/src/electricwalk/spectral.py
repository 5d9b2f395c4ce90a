"""Momentum-space analysis: Bloch matrices, regrouped products, trace
formulas, dispersion relations, and closed-form revival operator norms.

All matrices here act on amplitude column vectors; the bridge to the
ket-indexed position dynamics of :mod:`electricwalk.walkcore` is the coin
transpose, see ``Coin.transposed``.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy.optimize import minimize_scalar

from .walkcore import Coin, FieldSpec, revival_parameters

TWO_PI = 2.0 * math.pi


def bloch_matrix(coin: Coin, k: float) -> np.ndarray:
    """Quasi-momentum representation of the zero-field walk,
    [[a e^{ik}, b e^{ik}], [-conj(b) e^{-ik}, conj(a) e^{-ik}]]."""
    up = cmath.exp(1j * k)
    dn = up.conjugate()
    a, b = coin.a, coin.b
    return np.array([[a * up, b * up],
                     [-np.conj(b) * dn, np.conj(a) * dn]], dtype=np.complex128)


def regrouped_bloch(coin: Coin, field: FieldSpec, k: float) -> np.ndarray:
    """m-step Bloch product W(k + Phi) W(k + 2 Phi) ... W(k + m Phi)."""
    m = field.m
    phi = field.phi
    out = np.eye(2, dtype=np.complex128)
    for j in range(1, m + 1):
        out = out @ bloch_matrix(coin, k + j * phi)
    return out


def regrouped_bloch_shift_form(coin: Coin, field: FieldSpec, k: float) -> np.ndarray:
    """Equivalent product S(Phi) W(k) S(Phi)^2 W(k) ... S(Phi)^m W(k).

    Test oracle for :func:`regrouped_bloch`; the momentum-shift form is
    canonical.
    """
    m = field.m
    phi = field.phi
    w0 = bloch_matrix(coin, k)
    out = np.eye(2, dtype=np.complex128)
    for j in range(1, m + 1):
        s = np.diag([cmath.exp(1j * j * phi), cmath.exp(-1j * j * phi)])
        out = out @ s @ w0
    return out


def trace_tau_direct(C: np.ndarray, m: int, root_index: int = 1) -> complex:
    """tr(C R^0 C R^1 ... C R^{m-1}) with R = diag(eta, 1/eta),
    eta = exp(2 pi i root_index / m) a primitive m-th root of unity."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if math.gcd(root_index % m if m > 1 else 1, m) != 1:
        raise ValueError(f"eta^{root_index} is not a primitive root for m={m}")
    C = np.asarray(C, dtype=np.complex128)
    eta = cmath.exp(2j * math.pi * root_index / m)
    out = np.eye(2, dtype=np.complex128)
    rj = 1.0 + 0.0j
    for j in range(m):
        out = out @ C @ np.diag([rj, 1.0 / rj])
        rj *= eta
    return complex(out[0, 0] + out[1, 1])


def trace_tau_closed(C: np.ndarray, m: int) -> complex:
    """Closed form of the regrouped trace.

    Odd m: a^m + d^m.  Even m: -(a^m + d^m) + 2((-ad)^{m/2} - (-det C)^{m/2}).
    The even-m form follows the proof chain tau_m = (-1)^{m/2}
    (tau_{m/2}^2 - 2 det(C)^{m/2}); the direct-product evaluation is the
    arbiter whenever the two are in doubt.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    C = np.asarray(C, dtype=np.complex128)
    a, d = complex(C[0, 0]), complex(C[1, 1])
    if m % 2:
        return a ** m + d ** m
    det = complex(C[0, 0] * C[1, 1] - C[0, 1] * C[1, 0])
    h = m // 2
    return -(a ** m + d ** m) + 2.0 * ((-a * d) ** h - (-det) ** h)


def dispersion(coin: Coin, field: FieldSpec, k):
    """Quasi-energy branches (omega_plus, omega_minus) of the m-step walk.

    cos(omega) = |a|^m cos(m(k + k0)) for odd m and
    -|a|^m cos(m(k + k0)) + (-1)^{m/2+1}(1 - |a|^m) for even m, with
    k0 = arg(a); independent of the field numerator.  Branches are the
    principal values +-arccos.
    """
    m = field.m
    k = np.asarray(k, dtype=float)
    k0 = cmath.phase(coin.a)
    am = abs(coin.a) ** m
    c = am * np.cos(m * (k + k0))
    if m % 2 == 0:
        c = -c + (-1) ** (m // 2 + 1) * (1.0 - am)
    c = np.clip(c, -1.0, 1.0)
    omega = np.arccos(c)
    return omega, -omega


def _deficiency_at_k(coin: Coin, field: FieldSpec, k: float) -> float:
    """max over branches of the revival defect magnitude at momentum k."""
    m = field.m
    mat = regrouped_bloch(coin, field, k)
    evals = np.linalg.eigvals(mat)
    if m % 2:
        return float(np.max(np.abs(evals ** 2 + 1.0)))
    return float(np.max(np.abs(evals + (-1.0) ** (m // 2))))


def revival_norm(coin: Coin, m: int) -> float:
    """Operator norm of the revival defect: 2|a|^m (odd m), 2|a|^{m/2} (even)."""
    return revival_parameters(coin, m)[2]


def revival_norm_grid(coin: Coin, m: int, points: int = 4096) -> float:
    """Verification path: maximize the defect over a k-grid, then refine
    the bracketing interval by bounded scalar maximization."""
    field = FieldSpec.rational(1, m) if m > 1 else FieldSpec.rational(0, 1)
    ks = np.linspace(0.0, TWO_PI, points, endpoint=False)
    vals = np.array([_deficiency_at_k(coin, field, k) for k in ks])
    i = int(np.argmax(vals))
    dk = TWO_PI / points
    lo, hi = ks[i] - dk, ks[i] + dk
    res = minimize_scalar(lambda k: -_deficiency_at_k(coin, field, k),
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-13})
    return max(float(vals[i]), float(-res.fun))


def dispersion_grid(coin: Coin, field: FieldSpec, points: int = 1024):
    """(k, omega_plus, omega_minus) sampled on a uniform Brillouin grid."""
    ks = np.linspace(0.0, TWO_PI, points, endpoint=False)
    wp, wm = dispersion(coin, field, ks)
    return ks, wp, wm
