"""Bessel, Hankel and modified Bessel functions of real order.

Evaluation strategy for ``z > 0`` and ``|ν| ≤ 50``:

* ``J_ν``: ascending power series for ``z ≤ 12``; Hankel large-argument
  expansion above, with Miller backward recurrence for orders above 6.
* ``Y_ν``: sine quotient for non-integer order, logarithmic series for
  integer order (``z ≤ 12``), Hankel expansion above; orders above 6 by
  forward recurrence, which is stable for ``Y``.
* negative orders by the reflection formulas.
* ``K_ν``: trapezoid rule on ``∫₀^∞ exp(−z cosh t) cosh(νt) dt``, which
  converges geometrically for this doubly-exponentially decaying integrand.

All functions accept scalars or arrays for ``z`` and return the matching shape.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import OrderOverflow, ZeroArgument

CROSSOVER = 12.0
MAX_ORDER = 50.0
DIRECT_ORDER = 6.0
LOG_SERIES_TERMS = 30
EULER_GAMMA = 0.57721566490153286061


def _prepare(nu, z):
    nu = float(nu)
    if not math.isfinite(nu) or abs(nu) > MAX_ORDER:
        raise OrderOverflow(f"|nu| = {abs(nu)} exceeds {MAX_ORDER}")
    za = np.asarray(z, dtype=float)
    if np.any(~(za > 0)):
        raise ZeroArgument("Bessel functions are evaluated for z > 0 only")
    return nu, za


def _int_order(nu):
    n = round(nu)
    return n if abs(nu - n) < 1e-14 else None


def _cos_sin_pi(a):
    """``(cos πa, sin πa)`` with exact values at half-integers."""
    twice = round(2.0 * a)
    if abs(2.0 * a - twice) < 1e-14:
        table = ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))
        return table[twice % 4]
    return math.cos(a * math.pi), math.sin(a * math.pi)


def _j_series(nu, z):
    """Ascending series; valid for any real order with ``nu+1`` not a pole."""
    x = 0.25 * z * z
    g = math.gamma(nu + 1.0) if not (nu + 1.0 <= 0 and float(nu + 1.0).is_integer()) else math.inf
    term = np.power(0.5 * z, nu) / g
    total = term.copy()
    for m in range(200):
        term = -term * x / ((m + 1.0) * (m + nu + 1.0))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def _hankel_pq(nu, z):
    mu = 4.0 * nu * nu
    P = np.ones_like(z)
    Q = np.zeros_like(z)
    term = np.ones_like(z)
    prev = np.abs(term)
    active = np.ones(z.shape, dtype=bool)
    for k in range(1, 80):
        term = term * (mu - (2.0 * k - 1.0) ** 2) / (k * 8.0 * z)
        mag = np.abs(term)
        # terms may grow initially; past (2k-1)^2 > mu growth means divergence
        if (2.0 * k - 1.0) ** 2 > mu:
            active &= mag <= prev
        sign = (-1.0) ** (k // 2)
        contrib = np.where(active, sign * term, 0.0)
        if k % 2 == 0:
            P += contrib
        else:
            Q += contrib
        active &= mag > 1e-17
        if not active.any():
            break
        prev = mag
    return P, Q


def _hankel_jy(nu, z):
    P, Q = _hankel_pq(nu, z)
    chi = z - (0.5 * nu + 0.25) * math.pi
    amp = np.sqrt(2.0 / (math.pi * z))
    c, s = np.cos(chi), np.sin(chi)
    return amp * (P * c - Q * s), amp * (P * s + Q * c)


def _y_integer_series(n, z):
    half = 0.5 * z
    x = -0.25 * z * z
    jn = _j_series(float(n), z)
    out = (2.0 / math.pi) * np.log(half) * jn
    if n > 0:
        finite = np.zeros_like(z)
        for k in range(n):
            finite += math.factorial(n - k - 1) / math.factorial(k) * np.power(half, 2 * k - n)
        out -= finite / math.pi
    harmonic = [0.0]
    for k in range(1, n + LOG_SERIES_TERMS + 1):
        harmonic.append(harmonic[-1] + 1.0 / k)
    acc = np.zeros_like(z)
    xk = np.ones_like(z)
    for k in range(LOG_SERIES_TERMS):
        psi_sum = (harmonic[k] - EULER_GAMMA) + (harmonic[n + k] - EULER_GAMMA)
        acc += psi_sum * xk / (math.factorial(k) * math.factorial(n + k))
        xk = xk * x
    out -= np.power(half, n) * acc / math.pi
    return out


def _jy_direct(nu, z):
    """``(J_ν, Y_ν)`` for ``0 ≤ ν ≤ DIRECT_ORDER``."""
    J = np.empty_like(z)
    Y = np.empty_like(z)
    small = z <= CROSSOVER
    big = ~small
    if big.any():
        J[big], Y[big] = _hankel_jy(nu, z[big])
    if small.any():
        zs = z[small]
        J[small] = _j_series(nu, zs)
        n = _int_order(nu)
        if n is not None:
            Y[small] = _y_integer_series(n, zs)
        else:
            c, s = _cos_sin_pi(nu)
            Y[small] = (J[small] * c - _j_series(-nu, zs)) / s
    return J, Y


def _j_miller(nu, z):
    """``J_ν`` by backward recurrence, normalized against a low-order pair."""
    frac = nu - math.floor(nu)
    base = frac  # lowest order of the chain
    steps = int(round(nu - base))
    start = int(max(steps, np.max(z))) + 40 + int(np.sqrt(40.0 * np.max(z)))
    f_hi = np.zeros_like(z)
    f = np.full_like(z, 1e-300)
    keep_nu = None
    for k in range(start, 0, -1):
        order = base + k
        f_lo = (2.0 * order / z) * f - f_hi
        f_hi, f = f, f_lo
        big = np.abs(f) > 1e250
        if big.any():
            scale = np.where(big, 1e-250, 1.0)
            f *= scale
            f_hi *= scale
            if keep_nu is not None:
                keep_nu *= scale
        if k - 1 == steps:
            keep_nu = f.copy()
    if steps == 0:
        keep_nu = f.copy()
    j0, _ = _jy_direct(base, z)
    j1, _ = _jy_direct(base + 1.0, z)
    use0 = np.abs(j0) >= np.abs(j1)
    norm = np.where(use0, j0 / f, j1 / f_hi)
    return keep_nu * norm


def _jy_nonneg(nu, z):
    if nu <= DIRECT_ORDER:
        return _jy_direct(nu, z)
    base = nu - math.floor(nu)
    steps = int(round(nu - base))
    _, y_prev = _jy_direct(base, z)
    _, y_cur = _jy_direct(base + 1.0, z)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, steps):
            y_prev, y_cur = y_cur, (2.0 * (base + k) / z) * y_cur - y_prev
    J = np.empty_like(z)
    small = z <= CROSSOVER
    if small.any():
        J[small] = _j_series(nu, z[small])
    if (~small).any():
        J[~small] = _j_miller(nu, z[~small])
    return J, y_cur


def _jy(nu, z):
    if nu >= 0:
        return _jy_nonneg(nu, z)
    a = -nu
    J, Y = _jy_nonneg(a, z)
    n = _int_order(a)
    if n is not None:
        sgn = -1.0 if n % 2 else 1.0
        return sgn * J, sgn * Y
    c, s = _cos_sin_pi(a)
    return c * J - s * Y, s * J + c * Y


def _shape_out(arr, z):
    return float(arr) if np.ndim(z) == 0 else arr


def bessel_jy(nu, z):
    """Return ``(J_ν(z), Y_ν(z))`` together; cheaper than two calls."""
    nu, za = _prepare(nu, z)
    flat = np.atleast_1d(za).ravel()
    J, Y = _jy(nu, flat)
    J = J.reshape(za.shape)
    Y = Y.reshape(za.shape)
    return _shape_out(J, z), _shape_out(Y, z)


def bessel_j(nu, z):
    return bessel_jy(nu, z)[0]


def bessel_y(nu, z):
    return bessel_jy(nu, z)[1]


def hankel1(nu, z):
    J, Y = bessel_jy(nu, z)
    out = np.asarray(J) + 1j * np.asarray(Y)
    return complex(out) if np.ndim(z) == 0 else out


def bessel_k(nu, z, h: float | None = None):
    """Modified Bessel function ``K_ν(z)`` of the second kind."""
    nu, za = _prepare(nu, z)
    nu = abs(nu)
    flat = np.atleast_1d(za).ravel()
    zmin = float(flat.min())
    if h is None:
        # the integrand's peak narrows like 1/sqrt(z)
        h = min(0.1, 0.5 / math.sqrt(float(flat.max())))
    # integrand below e^-45 relative to its peak beyond T
    T = math.acosh(max(1.0, (45.0 + nu * 8.0) / zmin)) + 1.0
    T = max(T, math.log(2.0 * (45.0 + nu * T) / zmin) if zmin < 1 else T)
    t = np.arange(0.0, T + h, h)
    w = np.full(t.shape, h)
    w[0] = 0.5 * h
    out = np.empty_like(flat)
    chunk = max(1, 2_000_000 // t.size)
    ch = np.cosh(t)
    cn = np.cosh(nu * t) * w
    for s in range(0, flat.size, chunk):
        zz = flat[s : s + chunk]
        out[s : s + chunk] = np.exp(-np.outer(zz, ch)) @ cn
    out = out.reshape(za.shape)
    return _shape_out(out, z)
