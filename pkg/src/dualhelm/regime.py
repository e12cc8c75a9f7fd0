"""Coefficient regimes, factorization roots and admissible exponents.

The operator ``Δ² − βΔ + α`` factors as ``(−Δ − a1)(−Δ − a2)`` where
``a1 ≥ a2`` solve ``a² + βa + α = 0``. Three coefficient regimes are
supported:

* ``A``: ``α < 0`` (any ``β``), roots ``a1 > 0 > a2``;
* ``B``: ``α > 0`` and ``β < −2√α``, roots ``a1 > a2 > 0``;
* ``C``: ``α = 0`` and ``β < 0``, roots ``a1 > 0 = a2``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import DoubleRoot, ExponentOutOfRange, InvalidRegime, UnsupportedDimension

DOUBLE_ROOT_RTOL = 1e-12
P_MARGIN_RTOL = 1e-9


class Regime(str, enum.Enum):
    A = "A"
    B = "B"
    C = "C"


@dataclass(frozen=True)
class FactorRoots:
    a1: float
    a2: float
    disc: float

    def __iter__(self):
        yield self.a1
        yield self.a2


def _check_double_root(alpha: float, beta: float) -> float:
    d2 = beta * beta - 4.0 * alpha
    if d2 <= DOUBLE_ROOT_RTOL * max(1.0, beta * beta, abs(alpha)):
        raise DoubleRoot(
            f"beta^2 - 4 alpha = {d2:.3e} for alpha={alpha}, beta={beta}: "
            "double root, factorization degenerates"
        )
    return d2


def classify_regime(alpha: float, beta: float, N: int | None = None) -> Regime:
    """Return the regime tag of ``(alpha, beta)``.

    ``N`` is accepted for interface symmetry; dimension limits are enforced by
    :func:`admissible_p_range`.
    """
    alpha = float(alpha)
    beta = float(beta)
    if not (math.isfinite(alpha) and math.isfinite(beta)):
        raise InvalidRegime(f"non-finite coefficients alpha={alpha}, beta={beta}")
    if alpha < 0:
        return Regime.A
    if alpha == 0:
        if beta < 0:
            return Regime.C
        raise InvalidRegime(f"alpha=0 requires beta<0, got beta={beta}")
    # alpha > 0: need beta < -2 sqrt(alpha); the boundary is a double root.
    if beta < 0:
        _check_double_root(alpha, beta)
        if beta < -2.0 * math.sqrt(alpha):
            return Regime.B
    raise InvalidRegime(
        f"alpha={alpha}>0 requires beta < -2*sqrt(alpha) = {-2.0 * math.sqrt(alpha):.6g}, "
        f"got beta={beta}"
    )


def compute_roots(alpha: float, beta: float) -> FactorRoots:
    """Roots ``a1 > a2`` of ``a² + βa + α``, with ``disc = a1 − a2``.

    Uses the cancellation-free form ``q = −(β + sign(β)·disc)/2``; the two
    roots are ``q`` and ``α/q``.
    """
    alpha = float(alpha)
    beta = float(beta)
    disc = math.sqrt(_check_double_root(alpha, beta))
    q = -0.5 * (beta + math.copysign(disc, beta))
    r1 = q
    r2 = alpha / q if q != 0.0 else 0.0
    a1, a2 = (r1, r2) if r1 >= r2 else (r2, r1)
    return FactorRoots(a1=a1, a2=a2, disc=disc)


def critical_upper(N: int) -> float:
    """The fourth-order critical exponent ``2** = 2N/(N−4)`` (infinite for ``N ≤ 4``)."""
    return math.inf if N <= 4 else 2.0 * N / (N - 4)


def admissible_p_range(N: int, regime: Regime | str) -> tuple[float, float]:
    regime = Regime(regime)
    N = int(N)
    if regime is Regime.C:
        if N < 3:
            raise UnsupportedDimension(f"regime C requires N >= 3, got N={N}")
        lo = 2.0 * N / (N - 2)
    else:
        if N < 2:
            raise UnsupportedDimension(f"regime {regime.value} requires N >= 2, got N={N}")
        lo = 2.0 * (N + 1) / (N - 1)
    return lo, critical_upper(N)


def format_window(window: tuple[float, float]) -> str:
    lo, hi = window
    hs = "∞" if math.isinf(hi) else f"{hi:g}"
    return f"({lo:g}, {hs})"


def p_in_window(p: float, window: tuple[float, float]) -> bool:
    lo, hi = window
    if not p > lo * (1.0 + P_MARGIN_RTOL):
        return False
    return math.isinf(hi) or p < hi * (1.0 - P_MARGIN_RTOL)


def conjugate_exponent(p: float) -> float:
    p = float(p)
    if not p > 1.0:
        raise ValueError(f"conjugate exponent needs p > 1, got {p}")
    return p / (p - 1.0)


@dataclass(frozen=True)
class ModelParameters:
    """Validated model data ``(N, α, β, p)`` with derived regime and roots."""

    N: int
    alpha: float
    beta: float
    p: float
    regime: Regime = field(init=False)
    roots: FactorRoots = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "p", float(self.p))
        regime = classify_regime(self.alpha, self.beta, self.N)
        window = admissible_p_range(self.N, regime)
        if not p_in_window(self.p, window):
            label = "(A2)" if regime is Regime.C else "(A1)"
            raise ExponentOutOfRange(
                f"p={self.p:g} outside {label} window {format_window(window)} for N={self.N}"
            )
        object.__setattr__(self, "regime", regime)
        object.__setattr__(self, "roots", compute_roots(self.alpha, self.beta))

    @property
    def p_conj(self) -> float:
        return conjugate_exponent(self.p)

    @property
    def window(self) -> tuple[float, float]:
        return admissible_p_range(self.N, self.regime)

    def symbol(self, s):
        """Quartic symbol ``s² + βs + α`` evaluated at ``s = |ξ|²``."""
        return s * s + self.beta * s + self.alpha
