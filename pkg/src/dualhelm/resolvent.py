"""Periodic grids, the real resolvent multiplier and spectral operators.

The whole space is replaced by a torus of side ``L`` sampled at ``n`` points
per axis. On it the resolvent ``R = Re 𝓡`` of ``Δ² − βΔ + α`` is the Fourier
multiplier

    m_η(ξ) = Re[1 / ((|ξ|² − a1 − iη)(|ξ|² − a2 − iη))],

which is algebraically equal to the partial-fraction form
``Re[(1/disc)(1/(x1 − iη) − 1/(x2 − iη))]`` but free of cancellation at
large ``|ξ|``. At ``η = 0`` the principal value convention gives 0 to a
``1/x`` term sitting exactly at ``x = 0``; this only arises at ``ξ = 0`` when
``a2 = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergent, PreconditionError, ShapeMismatch, SingularShell
from .regime import FactorRoots

ETA_FLOOR = 1e-6


@dataclass(frozen=True)
class TorusGrid:
    """Periodic box ``[-L/2, L/2)^N`` with ``n`` points per axis."""

    L: float
    n: int
    N: int
    freq_sq: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise PreconditionError(f"n must be even and >= 2, got {self.n}")
        if not self.L > 0:
            raise PreconditionError(f"L must be positive, got {self.L}")
        if self.N < 1:
            raise PreconditionError(f"N must be positive, got {self.N}")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "freq_sq", self._freq_sq(half=True))

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def dv(self) -> float:
        """Volume element ``h^N``."""
        return self.h**self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.N

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(self.N))

    @property
    def k1d(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    @property
    def x1d(self) -> np.ndarray:
        """Axis coordinates ``(i − n/2)h``; the origin is a grid point."""
        return (np.arange(self.n) - self.n // 2) * self.h

    def coords(self) -> list[np.ndarray]:
        return np.meshgrid(*([self.x1d] * self.N), indexing="ij", sparse=True)

    def radius(self, center=None) -> np.ndarray:
        """Periodic distance from ``center`` (minimum image)."""
        center = np.zeros(self.N) if center is None else np.asarray(center, dtype=float)
        r2 = 0.0
        for ax, c in zip(self.coords(), center):
            d = ax - c
            d = d - self.L * np.round(d / self.L)
            r2 = r2 + d * d
        return np.sqrt(np.broadcast_to(r2, self.shape))

    def _freq_sq(self, half: bool) -> np.ndarray:
        k = self.k1d
        ks = [k * k] * self.N
        if half:
            ks[-1] = (2.0 * np.pi * np.fft.rfftfreq(self.n, d=self.h)) ** 2
        grids = np.meshgrid(*ks, indexing="ij", sparse=True)
        out = grids[0]
        for g in grids[1:]:
            out = out + g
        return np.ascontiguousarray(out)

    def full_freq_sq(self) -> np.ndarray:
        """``|ξ|²`` on the full (non-halved) frequency lattice."""
        return self._freq_sq(half=False)

    def shell_gap(self, a: float) -> float:
        """``min |ξ|² − a`` over the lattice (absolute value)."""
        return float(np.min(np.abs(self.freq_sq - a)))

    def is_admissible(self, roots: FactorRoots, eta_floor: float = ETA_FLOOR) -> bool:
        return all(self.shell_gap(a) >= eta_floor for a in roots if a > 0)

    def fft(self, f):
        return np.fft.rfftn(f, axes=self.axes)

    def ifft(self, F):
        return np.fft.irfftn(F, s=self.shape, axes=self.axes)

    @classmethod
    def auto(cls, roots: FactorRoots, N: int, n: int | None = None, wavelengths: float = 8.0):
        """Default box: ``L ≈ 2·wavelengths·π/√a1`` nudged so the ``a1`` shell
        lies halfway between lattice shells.

        With ``L = 2π√(k + 1/2)/√a1`` the lattice values ``|ξ|² = (2π/L)²·j``
        (``j`` integer) straddle ``a1`` symmetrically.
        """
        if n is None:
            n = {2: 128, 3: 64}.get(N, 32 if N == 4 else 16)
        target = wavelengths**2
        k = max(1, int(round(target - 0.5)))
        L = 2.0 * math.pi * math.sqrt(k + 0.5) / math.sqrt(roots.a1)
        return cls(L=L, n=n, N=N)


@dataclass(frozen=True)
class GridField:
    samples: np.ndarray
    grid: TorusGrid

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.shape != self.grid.shape:
            raise ShapeMismatch(f"samples {s.shape} vs grid {self.grid.shape}")
        object.__setattr__(self, "samples", s)

    def norm(self, q: float) -> float:
        return lp_norm(self.samples, q, self.grid)


def lp_norm(f, q: float, grid: TorusGrid) -> float:
    f = np.asarray(f)
    if math.isinf(q):
        return float(np.max(np.abs(f)))
    return float((grid.dv * np.sum(np.abs(f) ** q)) ** (1.0 / q))


def inner(u, v, grid: TorusGrid) -> float:
    return float(grid.dv * np.vdot(np.ravel(u), np.ravel(v)).real)


@dataclass(frozen=True)
class SpectralMultiplier:
    """Real multiplier ``m_η`` on the half-spectrum layout of ``grid``."""

    values: np.ndarray
    eta: float
    grid: TorusGrid
    roots: FactorRoots

    def full_values(self) -> np.ndarray:
        return multiplier_values(self.roots, self.grid.full_freq_sq(), self.eta)


def multiplier_values(roots: FactorRoots, s, eta: float) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    x1 = s - roots.a1
    x2 = s - roots.a2
    if eta > 0:
        # Re[1/((x1-iη)(x2-iη))] = (x1 x2 − η²)/((x1²+η²)(x2²+η²))
        return (x1 * x2 - eta * eta) / ((x1 * x1 + eta * eta) * (x2 * x2 + eta * eta))
    with np.errstate(divide="ignore", invalid="ignore"):
        m = 1.0 / (x1 * x2)
    # principal value: a 1/x term at x = 0 contributes 0
    z1 = x1 == 0
    z2 = x2 == 0
    m = np.where(z2 & ~z1, (1.0 / np.where(z2, x1, 1.0)) / roots.disc, m)
    m = np.where(z1 & ~z2, (-1.0 / np.where(z1, x2, 1.0)) / roots.disc, m)
    return m


def build_multiplier(
    roots: FactorRoots, grid: TorusGrid, eta: float, eta_floor: float = ETA_FLOOR
) -> SpectralMultiplier:
    eta = float(eta)
    if eta < 0:
        raise PreconditionError(f"eta must be >= 0, got {eta}")
    if eta == 0 and not grid.is_admissible(roots, eta_floor):
        gaps = {f"a={a:g}": grid.shell_gap(a) for a in roots if a > 0}
        raise SingularShell(f"lattice frequency on a singular shell at eta=0 (gaps {gaps})")
    return SpectralMultiplier(
        values=multiplier_values(roots, grid.freq_sq, eta), eta=eta, grid=grid, roots=roots
    )


def _unwrap(v, grid: TorusGrid):
    if isinstance(v, GridField):
        if v.grid.shape != grid.shape:
            raise ShapeMismatch(f"field on {v.grid.shape} vs grid {grid.shape}")
        return v.samples, True
    a = np.asarray(v, dtype=float)
    if a.shape != grid.shape:
        raise ShapeMismatch(f"field shape {a.shape} vs grid {grid.shape}")
    return a, False


def apply_multiplier(v, values, grid: TorusGrid):
    a, wrapped = _unwrap(v, grid)
    out = grid.ifft(values * grid.fft(a))
    return GridField(out, grid) if wrapped else out


def apply_R(v, mult: SpectralMultiplier):
    """``R v``: inverse transform of ``m_η`` times the transform of ``v``."""
    return apply_multiplier(v, mult.values, mult.grid)


def quartic_symbol(roots: FactorRoots, s):
    return (s - roots.a1) * (s - roots.a2)


def apply_L(u, roots: FactorRoots, grid: TorusGrid):
    """Spectral ``Δ²u − βΔu + αu``."""
    return apply_multiplier(u, quartic_symbol(roots, grid.freq_sq), grid)


def apply_complex_resolvent(v, roots: FactorRoots, grid: TorusGrid, eta: float) -> np.ndarray:
    """Full complex ``𝓡_η v`` with multiplier ``1/((x1 − iη)(x2 − iη))``.

    Diagnostic only: the solver uses the real part.
    """
    if not eta > 0:
        raise PreconditionError("complex resolvent needs eta > 0")
    a, _ = _unwrap(v, grid)
    s = grid.full_freq_sq()
    m = 1.0 / ((s - roots.a1 - 1j * eta) * (s - roots.a2 - 1j * eta))
    return np.fft.ifftn(m * np.fft.fftn(a, axes=grid.axes), axes=grid.axes)


@dataclass
class ExtrapolationReport:
    etas: list
    differences: list
    converged: bool
    estimate_error: float


def eta_extrapolate(v, roots: FactorRoots, grid: TorusGrid, etas, eta_floor: float = ETA_FLOOR):
    """Apply ``R_η`` for decreasing ``etas`` and Richardson-extrapolate to 0.

    The multiplier deviates from its ``η = 0`` value by ``O(η²)`` off the
    shells, so successive pairs combine as
    ``(η_i² R_{i+1} − η_{i+1}² R_i)/(η_i² − η_{i+1}²)``.
    Returns ``(field, report)``; the reported differences are the discrete L²
    distances between successive extrapolants (or raw values for a single η).
    """
    etas = [float(e) for e in etas]
    if not etas:
        raise PreconditionError("etas must be non-empty")
    if any(b >= a for a, b in zip(etas, etas[1:])):
        raise PreconditionError("etas must be strictly decreasing")
    if any(0 < e < eta_floor or e < 0 for e in etas):
        raise PreconditionError(f"etas must be 0 or >= eta_floor={eta_floor}")
    a, wrapped = _unwrap(v, grid)
    vals = [apply_R(a, build_multiplier(roots, grid, e, eta_floor)) for e in etas]
    if len(vals) == 1:
        out = vals[0]
        report = ExtrapolationReport(etas, [], True, 0.0)
    else:
        ext = []
        for (e0, r0), (e1, r1) in zip(zip(etas, vals), zip(etas[1:], vals[1:])):
            w0, w1 = e0 * e0, e1 * e1
            ext.append((w0 * r1 - w1 * r0) / (w0 - w1))
        seq = ext if len(ext) > 1 else vals
        diffs = [lp_norm(b - c, 2, grid) for b, c in zip(seq, seq[1:])]
        scale = max(lp_norm(ext[-1], 2, grid), np.finfo(float).tiny)
        growing = any(d1 > d0 * (1 + 1e-12) + 1e-300 for d0, d1 in zip(diffs, diffs[1:]))
        if growing:
            raise NonConvergent(f"eta extrapolation differences grow: {diffs}")
        out = ext[-1]
        report = ExtrapolationReport(etas, diffs, True, (diffs[-1] / scale) if diffs else 0.0)
    return (GridField(out, grid) if wrapped else out), report
