"""Dual energy, gradient, quadratic form and Nehari projection.

For a weight ``W_ε(x) = W(εx)`` and ``w = W_ε^{1/p}`` the dual functional is

    J(v) = (1/p')‖v‖_{p'}^{p'} − ½ Q(v),    Q(v) = ⟨w v, R(w v)⟩,

whose critical points satisfy ``|v|^{p'−2}v = w R(w v)`` and give solutions
``u = R(w v)`` of ``Δ²u − βΔu + αu = W_ε|u|^{p−2}u``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotInUPlus, PreconditionError, ZeroField
from .regime import ModelParameters
from .resolvent import SpectralMultiplier, TorusGrid, apply_R, build_multiplier, inner, lp_norm

UPLUS_RTOL = 1e-10
DEFAULT_ETA_FRACTION = 0.02


def default_eta(params: ModelParameters) -> float:
    """Limiting-absorption parameter used when none is configured: ``0.02·a1``."""
    return DEFAULT_ETA_FRACTION * params.roots.a1


class WeightKind(str, enum.Enum):
    CONSTANT = "constant"
    GAUSSIAN_BUMPS = "gaussian_bumps"
    PLATEAU = "plateau"


@dataclass(frozen=True)
class WeightSpec:
    """Declarative weight ``W``.

    * ``constant``: ``W ≡ value``.
    * ``gaussian_bumps``: ``W = floor + max_i (h_i − floor)·exp(−|x − y_i|²/(2σ_i²))``;
      peaks equal ``h_i`` at ``y_i``.
    * ``plateau``: ``W = floor + (h − floor)·s(|x − y|)`` where ``s = 1`` on the
      ball of radius ``radius`` and falls to 0 with a cosine taper of width ``width``.
    """

    kind: WeightKind
    centers: tuple = ()
    heights: tuple = ()
    widths: tuple = ()
    floor: float = 0.0
    value: float = 1.0
    radius: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", WeightKind(self.kind))
        object.__setattr__(self, "centers", tuple(tuple(float(c) for c in y) for y in self.centers))
        object.__setattr__(self, "heights", tuple(float(h) for h in self.heights))
        object.__setattr__(self, "widths", tuple(float(s) for s in self.widths))
        object.__setattr__(self, "floor", float(self.floor))
        self.validate()

    @classmethod
    def constant(cls, value: float) -> "WeightSpec":
        return cls(WeightKind.CONSTANT, value=float(value))

    @classmethod
    def bumps(cls, centers, heights, widths, floor: float = 0.0) -> "WeightSpec":
        k = len(centers)
        heights = list(heights) if np.ndim(heights) else [heights] * k
        widths = list(widths) if np.ndim(widths) else [widths] * k
        return cls(WeightKind.GAUSSIAN_BUMPS, centers=centers, heights=heights, widths=widths, floor=floor)

    @classmethod
    def plateau(cls, center, height, radius, width, floor: float = 0.0) -> "WeightSpec":
        return cls(
            WeightKind.PLATEAU, centers=(center,), heights=(height,), widths=(width,), floor=floor, radius=radius
        )

    def validate(self) -> None:
        if self.kind is WeightKind.CONSTANT:
            if not (self.value > 0 and math.isfinite(self.value)):
                raise PreconditionError(f"constant weight must be positive, got {self.value}")
            return
        if not self.centers:
            raise PreconditionError("weight needs at least one center")
        if not (len(self.centers) == len(self.heights) == len(self.widths)):
            raise PreconditionError("centers, heights and widths must have equal length")
        dims = {len(c) for c in self.centers}
        if len(dims) != 1:
            raise PreconditionError("centers have inconsistent dimensions")
        if self.floor < 0:
            raise PreconditionError(f"floor must be >= 0, got {self.floor}")
        if any(not s > 0 for s in self.widths):
            raise PreconditionError("widths must be positive")
        if self.kind is WeightKind.PLATEAU:
            if len(self.centers) != 1:
                raise PreconditionError("plateau takes exactly one center")
            if self.radius < 0:
                raise PreconditionError("plateau radius must be >= 0")
        # decay condition: the value at infinity stays below the supremum
        if not self.floor < self.W0:
            raise PreconditionError(f"floor {self.floor} must be below sup W = {self.W0}")
        if any(not h > self.floor for h in self.heights):
            raise PreconditionError("every height must exceed the floor")

    @property
    def dim(self) -> int | None:
        return len(self.centers[0]) if self.centers else None

    @property
    def W0(self) -> float:
        if self.kind is WeightKind.CONSTANT:
            return self.value
        return max(self.heights)

    @property
    def is_constant(self) -> bool:
        return self.kind is WeightKind.CONSTANT

    @property
    def width(self) -> float:
        """Characteristic length of the maximizer neighborhoods."""
        if self.kind is WeightKind.CONSTANT:
            return math.inf
        return min(self.widths)

    def maximizers(self) -> list[tuple]:
        """Global maximizers in lexicographic order (plateau: its center)."""
        if self.kind is WeightKind.CONSTANT:
            raise PreconditionError("constant weight: every point is a maximizer")
        W0 = self.W0
        return sorted(c for c, h in zip(self.centers, self.heights) if h == W0)

    def dist_to_M(self, x) -> float:
        x = np.asarray(x, dtype=float)
        d = min(float(np.linalg.norm(x - np.asarray(c))) for c in self.maximizers())
        if self.kind is WeightKind.PLATEAU:
            d = max(0.0, d - self.radius)
        return d

    def evaluate(self, coords) -> np.ndarray:
        """``W`` at points given as a list of broadcastable coordinate arrays."""
        if self.kind is WeightKind.CONSTANT:
            shape = np.broadcast(*coords).shape
            return np.full(shape, self.value)
        if len(coords) != self.dim:
            raise PreconditionError(f"weight is {self.dim}-dimensional, got {len(coords)} coordinates")
        if self.kind is WeightKind.GAUSSIAN_BUMPS:
            prof = None
            for c, h, s in zip(self.centers, self.heights, self.widths):
                r2 = sum((x - ci) ** 2 for x, ci in zip(coords, c))
                b = (h - self.floor) * np.exp(-r2 / (2.0 * s * s))
                prof = b if prof is None else np.maximum(prof, b)
            return self.floor + np.broadcast_to(prof, np.broadcast(*coords).shape)
        c, h, s = self.centers[0], self.heights[0], self.widths[0]
        r = np.sqrt(sum((x - ci) ** 2 for x, ci in zip(coords, c)))
        t = np.clip((r - self.radius) / s, 0.0, 1.0)
        taper = 0.5 * (1.0 + np.cos(np.pi * t))
        return self.floor + (h - self.floor) * np.broadcast_to(taper, np.broadcast(*coords).shape)

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        if self.kind is WeightKind.CONSTANT:
            d["value"] = self.value
            return d
        d.update(
            centers=[list(c) for c in self.centers],
            heights=list(self.heights),
            widths=list(self.widths),
            floor=self.floor,
        )
        if self.kind is WeightKind.PLATEAU:
            d["radius"] = self.radius
        return d


@dataclass(frozen=True)
class DualProblem:
    params: ModelParameters
    grid: TorusGrid
    mult: SpectralMultiplier
    weight: np.ndarray = field(repr=False)
    eps: float
    w_pow: np.ndarray = field(repr=False)
    spec: WeightSpec

    @classmethod
    def build(
        cls,
        params: ModelParameters,
        grid: TorusGrid,
        spec: WeightSpec,
        eps: float = 1.0,
        eta: float | None = None,
    ) -> "DualProblem":
        if grid.N != params.N:
            raise PreconditionError(f"grid dimension {grid.N} != model dimension {params.N}")
        if not eps > 0:
            raise PreconditionError(f"eps must be positive, got {eps}")
        if not spec.is_constant and spec.dim != params.N:
            raise PreconditionError(f"weight dimension {spec.dim} != N={params.N}")
        eta = default_eta(params) if eta is None else float(eta)
        mult = build_multiplier(params.roots, grid, eta)
        W = spec.evaluate([eps * x for x in grid.coords()]).astype(float)
        W = np.ascontiguousarray(np.broadcast_to(W, grid.shape))
        return cls(
            params=params,
            grid=grid,
            mult=mult,
            weight=W,
            eps=float(eps),
            w_pow=W ** (1.0 / params.p),
            spec=spec,
        )

    @property
    def p(self) -> float:
        return self.params.p

    @property
    def pp(self) -> float:
        return self.params.p_conj

    @property
    def eta(self) -> float:
        return self.mult.eta

    def K(self, v) -> np.ndarray:
        """Birman–Schwinger operator ``w R(w v)``."""
        return self.w_pow * apply_R(self.w_pow * _arr(v), self.mult)

    def norm_pp(self, v) -> float:
        """``‖v‖_{p'}^{p'}``."""
        return float(self.grid.dv * np.sum(np.abs(_arr(v)) ** self.pp))


def _arr(v) -> np.ndarray:
    return getattr(v, "samples", v)


def duality_map(v, pp: float) -> np.ndarray:
    """``|v|^{p'−2}v = sign(v)|v|^{p'−1}``, equal to 0 at ``v = 0``."""
    v = np.asarray(v)
    return np.sign(v) * np.abs(v) ** (pp - 1.0)


def quad_form(v, prob: DualProblem) -> float:
    wv = prob.w_pow * _arr(v)
    return inner(wv, apply_R(wv, prob.mult), prob.grid)


def energy(v, prob: DualProblem) -> float:
    return prob.norm_pp(v) / prob.pp - 0.5 * quad_form(v, prob)


def gradient(v, prob: DualProblem) -> np.ndarray:
    v = _arr(v)
    return duality_map(v, prob.pp) - prob.K(v)


def in_uplus(v, prob: DualProblem, Q: float | None = None) -> bool:
    Q = quad_form(v, prob) if Q is None else Q
    return Q > UPLUS_RTOL * lp_norm(_arr(v), 2, prob.grid) ** 2


def nehari_scale(v, prob: DualProblem) -> float:
    """Unique ``t > 0`` maximizing ``t ↦ J(tv)``; requires ``Q(v) > 0``."""
    Q = quad_form(v, prob)
    if not in_uplus(v, prob, Q):
        raise NotInUPlus(f"Q(v) = {Q:.3e} is not positive")
    return (prob.norm_pp(v) / Q) ** (1.0 / (2.0 - prob.pp))


def nehari_energy(v, prob: DualProblem) -> float:
    """``J(t_v v) = (1/p' − 1/2) t_v^{p'} ‖v‖_{p'}^{p'}``."""
    t = nehari_scale(v, prob)
    return (1.0 / prob.pp - 0.5) * t**prob.pp * prob.norm_pp(v)


def compare_to_constant(v, prob: DualProblem) -> np.ndarray:
    """``(W_ε/W0)^{1/p} v``: the comparison field used against the limit problem."""
    return (prob.weight / prob.spec.W0) ** (1.0 / prob.p) * _arr(v)


def truncation(z, rho: float) -> np.ndarray:
    """``Ψ(z) = z`` inside the ball of radius ``ρ``, ``ρ z/|z|`` outside."""
    z = np.asarray(z, dtype=float)
    nz = np.linalg.norm(z, axis=0)
    if math.isinf(rho):
        return z
    scale = np.where(nz < rho, 1.0, rho / np.where(nz > 0, nz, 1.0))
    return z * scale


def truncated_barycenter(v, prob: DualProblem, rho: float) -> np.ndarray:
    """``∫ Ψ(εx)|v|^{p'} / ‖v‖_{p'}^{p'}`` in unscaled coordinates."""
    v = _arr(v)
    w = np.abs(v) ** prob.pp
    total = float(np.sum(w))
    if total == 0 or not np.isfinite(total):
        raise ZeroField("barycenter of a zero field")
    grid = prob.grid
    pts = np.stack([np.broadcast_to(prob.eps * c, grid.shape) for c in grid.coords()])
    psi = truncation(pts, rho)
    return np.array([float(np.sum(psi[i] * w)) / total for i in range(grid.N)])
