"""Fundamental solutions of ``−Δ − a`` and the fourth-order kernel ``G``."""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .bessel import bessel_j, bessel_jy, bessel_k, bessel_y, hankel1  # noqa: F401
from .errors import FitFailure, LaplaceDimension, UnsupportedDimension, ZeroArgument
from .regime import FactorRoots

__all__ = [
    "Branch",
    "KernelSample",
    "KernelBoundReport",
    "bessel_j",
    "bessel_y",
    "bessel_k",
    "hankel1",
    "phi_a",
    "green_g",
    "kernel_sample",
    "sphere_area",
    "verify_kernel_bounds",
]


class Branch(str, enum.Enum):
    OSCILLATORY = "oscillatory"
    DECAYING = "decaying"
    LAPLACE = "laplace"


def branch_of(a: float) -> Branch:
    if a > 0:
        return Branch.OSCILLATORY
    if a < 0:
        return Branch.DECAYING
    return Branch.LAPLACE


@dataclass(frozen=True)
class KernelSample:
    x_norm: float
    value: complex
    branch: Branch


def sphere_area(N: int) -> float:
    """Surface area ``ω_N`` of the unit sphere in ``R^N``."""
    return 2.0 * math.pi ** (N / 2) / math.gamma(N / 2)


def _radii(x_norm):
    r = np.asarray(x_norm, dtype=float)
    if np.any(~(r > 0)):
        raise ZeroArgument("kernel evaluated at |x| = 0")
    return r


def phi_a(a: float, x_norm, N: int):
    """Outgoing fundamental solution of ``−Δ − a`` in ``R^N`` at radius ``|x|``.

    ``a > 0``: ``(i/4)(√a/(2πr))^ν H¹_ν(√a r)`` with ``ν = (N−2)/2``.
    ``a < 0``: the real, exponentially decaying kernel of ``−Δ + |a|``,
    ``(1/2π)(√|a|/(2πr))^ν K_ν(√|a| r)``.
    ``a = 0``: the Laplace kernel ``1/((N−2)ω_N r^{N−2})``.
    """
    if N < 2:
        raise UnsupportedDimension(f"N={N} < 2")
    r = _radii(x_norm)
    nu = 0.5 * (N - 2)
    a = float(a)
    if a > 0:
        k = math.sqrt(a)
        out = 0.25j * (k / (2 * math.pi * r)) ** nu * np.asarray(hankel1(nu, k * r))
    elif a < 0:
        k = math.sqrt(-a)
        out = (k / (2 * math.pi * r)) ** nu * np.asarray(bessel_k(nu, k * r)) / (2 * math.pi)
        out = out.astype(complex)
    else:
        if N == 2:
            raise LaplaceDimension("a = 0 requires N >= 3")
        out = (1.0 / ((N - 2) * sphere_area(N) * r ** (N - 2))).astype(complex)
    return complex(out) if np.ndim(x_norm) == 0 else out


def green_g(roots: FactorRoots, x_norm, N: int):
    """Kernel ``G = (Φ_{a1} − Φ_{a2})/disc`` of ``Δ² − βΔ + α``."""
    out = (np.asarray(phi_a(roots.a1, x_norm, N)) - np.asarray(phi_a(roots.a2, x_norm, N))) / roots.disc
    return complex(out) if np.ndim(x_norm) == 0 else out


def kernel_sample(a: float, x_norm: float, N: int) -> KernelSample:
    return KernelSample(x_norm=float(x_norm), value=phi_a(a, x_norm, N), branch=branch_of(a))


@dataclass
class KernelBoundReport:
    """Fitted decay exponents of ``|G|`` against the expected bound classes.

    The inner model is ``constant`` (N = 2, 3), ``log`` (N = 4) or ``power``
    (N ≥ 5). For the log class the fitted exponent is the slope of
    ``log|r·d|G|/dr|`` against ``log r``, which is 0 for ``C·|log r|``.
    """

    N: int
    a1: float
    a2: float
    inner_model: str
    inner_exponent: float
    inner_expected: float
    outer_exponent: float
    outer_expected: float
    tol: float
    inner_radii: np.ndarray = field(repr=False)
    inner_abs: np.ndarray = field(repr=False)
    outer_radii: np.ndarray = field(repr=False)
    outer_abs: np.ndarray = field(repr=False)

    @property
    def inner_pass(self) -> bool:
        return abs(self.inner_exponent - self.inner_expected) <= self.tol

    @property
    def outer_pass(self) -> bool:
        return abs(self.outer_exponent - self.outer_expected) <= self.tol

    @property
    def passed(self) -> bool:
        return self.inner_pass and self.outer_pass

    def rows(self):
        for r, g in zip(self.inner_radii, self.inner_abs):
            yield float(r), float(g), self.inner_exponent, self.inner_pass
        for r, g in zip(self.outer_radii, self.outer_abs):
            yield float(r), float(g), self.outer_exponent, self.outer_pass

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["radius", "abs_G", "fitted_exponent", "pass"])
        for r, g, e, ok in self.rows():
            w.writerow([repr(r), repr(g), repr(e), int(ok)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "N": self.N,
            "a1": self.a1,
            "a2": self.a2,
            "inner_model": self.inner_model,
            "inner_exponent": self.inner_exponent,
            "inner_expected": self.inner_expected,
            "inner_pass": self.inner_pass,
            "outer_exponent": self.outer_exponent,
            "outer_expected": self.outer_expected,
            "outer_pass": self.outer_pass,
            "tol": self.tol,
        }


def _slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))) or np.ptp(x) == 0:
        raise FitFailure("degenerate regression data")
    return float(np.polyfit(x, y, 1)[0])


def verify_kernel_bounds(
    roots: FactorRoots, N: int, points: int = 41, tol: float = 0.1
) -> KernelBoundReport:
    if not 2 <= N <= 8:
        raise UnsupportedDimension(f"kernel bounds checked for N in 2..8, got {N}")
    r_in = np.logspace(-4, 0, points)
    r_out = np.logspace(0, 2, points)
    g_in = np.abs(green_g(roots, r_in, N))
    g_out = np.abs(green_g(roots, r_out, N))
    if np.any(g_in <= 0) or np.any(g_out <= 0):
        raise FitFailure("|G| vanished on a sample radius")
    lr = np.log(r_in)
    if N <= 3:
        model, expected = "constant", 0.0
        inner = _slope(lr, np.log(g_in))
    elif N == 4:
        model, expected = "log", 0.0
        deriv = np.abs(np.gradient(g_in, lr))
        if np.any(deriv <= 0):
            raise FitFailure("flat |G| in log-class fit")
        inner = _slope(lr, np.log(deriv))
    else:
        model, expected = "power", float(4 - N)
        inner = _slope(lr, np.log(g_in))
    outer = _slope(np.log(r_out), np.log(g_out))
    return KernelBoundReport(
        N=N,
        a1=roots.a1,
        a2=roots.a2,
        inner_model=model,
        inner_exponent=inner,
        inner_expected=expected,
        outer_exponent=outer,
        outer_expected=0.5 * (1 - N),
        tol=tol,
        inner_radii=r_in,
        inner_abs=g_in,
        outer_radii=r_out,
        outer_abs=g_out,
    )
