"""Nehari-constrained minimization of the dual energy.

The iteration runs in the dual coordinate ``z = |v|^{p'−2}v`` (so that
``v = |z|^{p−2}z``). Each step moves ``z`` along a quasi-Newton direction built
from the residual ``g = z − K v`` (limited-memory BFGS two-loop recursion over
pairs ``(Δz, Δg)``), maps back to ``v``, projects onto the Nehari manifold by
the closed-form rescaling, and backtracks until the Nehari energy satisfies an
Armijo condition. Working in ``z`` removes the non-smoothness of ``|v|^{p'}``
at ``v = 0`` and the poor conditioning of plain gradient steps in ``v``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .dual import (
    DualProblem,
    WeightSpec,
    _arr,
    duality_map,
    energy,
    in_uplus,
    quad_form,
    truncated_barycenter,
)
from .errors import NotInUPlus, PreconditionError, StalledLineSearch
from .regime import ModelParameters
from .resolvent import GridField, TorusGrid, apply_L, apply_R, lp_norm
from .bessel import bessel_j


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-7
    max_iter: int = 5000
    armijo: float = 0.5
    c1: float = 1e-4
    step0: float = 1.0
    memory: int = 8
    coordinates: str = "mirror"
    max_backtracks: int = 60

    def __post_init__(self):
        if self.coordinates not in ("mirror", "direct"):
            raise PreconditionError(f"coordinates must be 'mirror' or 'direct', got {self.coordinates!r}")
        if not (0 < self.armijo < 1 and 0 < self.c1 < 1 and self.tol > 0 and self.step0 > 0):
            raise PreconditionError("invalid line-search options")
        if self.max_iter < 0 or self.memory < 0:
            raise PreconditionError("max_iter and memory must be >= 0")


@dataclass
class SolveReport:
    energy: float
    residual: float
    t_scale: float
    iterations: int
    converged: bool
    barycenter: list
    u_norms: dict
    trace: list = field(default_factory=list)
    primal_residual: float = float("nan")
    eta: float = float("nan")
    eps: float = float("nan")
    message: str = ""

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "energy", "residual", "step"])
        for row in self.trace:
            w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "energy": float(self.energy),
            "residual": float(self.residual),
            "t_scale": float(self.t_scale),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "barycenter": [float(b) for b in self.barycenter],
            "u_norms": {k: float(v) for k, v in self.u_norms.items()},
            "primal_residual": float(self.primal_residual),
            "eta": float(self.eta),
            "eps": float(self.eps),
            "message": self.message,
        }

    def to_yaml(self) -> str:
        doc = self.to_dict()
        doc["trace"] = _Literal(self.trace_csv())
        return yaml.dump(doc, Dumper=_Dumper, sort_keys=False)


class _Literal(str):
    pass


class _Dumper(yaml.SafeDumper):
    pass


_Dumper.add_representer(
    _Literal, lambda d, s: d.represent_scalar("tag:yaml.org,2002:str", str(s), style="|")
)


@dataclass(frozen=True)
class DualState(GridField):
    """Dual field ``v`` on the grid, optionally with the report that produced it."""

    report: SolveReport | None = field(default=None, compare=False)


def reconstruct_u(v, prob: DualProblem) -> np.ndarray:
    """Primal field ``u_ε = R(W_ε^{1/p} v)``."""
    return apply_R(prob.w_pow * _arr(v), prob.mult)


def primal_residual(u, prob: DualProblem) -> float:
    """``‖Lu − W_ε|u|^{p−2}u‖₂ / ‖u‖₂^{p−1}``."""
    u = _arr(u)
    norm = lp_norm(u, 2, prob.grid)
    if norm == 0:
        return 0.0
    r = apply_L(u, prob.params.roots, prob.grid) - prob.weight * np.abs(u) ** (prob.p - 2) * u
    return lp_norm(r, 2, prob.grid) / norm ** (prob.p - 1)


def boundary_ratio(u) -> float:
    """Largest ``|u|`` on the box faces relative to its peak (wrap-around indicator)."""
    a = np.abs(np.asarray(u))
    peak = float(a.max())
    if peak == 0:
        return 0.0
    face = max(float(np.take(a, [0, -1], axis=ax).max()) for ax in range(a.ndim))
    return face / peak


def normalized_residual(v, g, prob: DualProblem) -> float:
    """``‖g‖_p / ‖v‖_{p'}^{p'−1}``."""
    A = prob.norm_pp(v)
    if A == 0:
        return math.inf
    return lp_norm(g, prob.p, prob.grid) / A ** ((prob.pp - 1.0) / prob.pp)


def seed_center(prob: DualProblem) -> np.ndarray:
    """Grid point nearest ``y*/ε`` for the first (lexicographic) weight maximizer."""
    if prob.spec.is_constant:
        return np.zeros(prob.grid.N)
    y = np.asarray(prob.spec.maximizers()[0]) / prob.eps
    h = prob.grid.h
    return np.round(y / h) * h


def radial_wave(r, k: float, N: int) -> np.ndarray:
    """Normalized radial plane-wave average ``Γ(ν+1)(2/(kr))^ν J_ν(kr)``, 1 at 0.

    Its spectrum is the sphere ``|ξ| = k``.
    """
    nu = 0.5 * (N - 2)
    r = np.asarray(r, dtype=float)
    out = np.ones_like(r)
    pos = r > 0
    kr = k * r[pos]
    out[pos] = math.gamma(nu + 1.0) * (2.0 / kr) ** nu * bessel_j(nu, kr)
    return out


def default_seed(prob: DualProblem, center=None, shift: float = 1.1) -> np.ndarray:
    """Bump seed ``W_ε^{1/p'}·ψ(|x − x*|)``.

    ``ψ`` is a Gaussian envelope of width ``2π/√a1`` carrying a radial wave of
    wavenumber ``shift·√a1``. The wave places the seed's spectrum just outside
    the ``a1`` shell where the resolvent multiplier is positive, so ``Q > 0``;
    a plain Gaussian has most of its spectrum where the multiplier is negative.
    """
    a1 = prob.params.roots.a1
    c = seed_center(prob) if center is None else np.asarray(center, dtype=float)
    r = prob.grid.radius(c)
    sigma = 2.0 * math.pi / math.sqrt(a1)
    psi = radial_wave(r, shift * math.sqrt(a1), prob.grid.N) * np.exp(-(r**2) / (2.0 * sigma**2))
    return prob.weight ** (1.0 / prob.pp) * psi


class _Evaluator:
    """Nehari projection and energy in either coordinate system."""

    def __init__(self, prob: DualProblem, mirror: bool):
        self.prob = prob
        self.mirror = mirror
        self.p = prob.p
        self.pp = prob.pp
        self.dv = prob.grid.dv

    def to_v(self, x):
        return np.abs(x) ** (self.p - 2.0) * x if self.mirror else x

    def project(self, x):
        """Return ``(x_on, J, Kv_on, t)`` or ``None`` when ``Q ≤ 0``."""
        v = self.to_v(x)
        Kv = self.prob.K(v)
        A = self.dv * float(np.sum(np.abs(v) ** self.pp))
        Q = self.dv * float(np.sum(v * Kv))
        if not (np.isfinite(Q) and Q > 0 and in_uplus(v, self.prob, Q)):
            return None
        t = (A / Q) ** (1.0 / (2.0 - self.pp))
        xs = x * t ** (self.pp - 1.0) if self.mirror else x * t
        J = (1.0 / self.pp - 0.5) * t**self.pp * A
        return xs, J, Kv * t, t

    def residual_field(self, x, Kv):
        return (x if self.mirror else duality_map(x, self.pp)) - Kv

    def metric(self, x, g):
        """Gradient of ``J`` with respect to ``x`` (up to the volume element)."""
        if self.mirror:
            return (self.p - 1.0) * np.abs(x) ** (self.p - 2.0) * g
        return g


def _two_loop(g, S, Y, dot):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(S), reversed(Y)):
        a = dot(s, q) / dot(y, s)
        alphas.append(a)
        q -= a * y
    if S:
        q *= dot(S[-1], Y[-1]) / dot(Y[-1], Y[-1])
    for (s, y), a in zip(zip(S, Y), reversed(alphas)):
        b = dot(y, q) / dot(y, s)
        q += (a - b) * s
    return -q


def _finish(prob, v, J, res, t, it, converged, trace, message):
    u = reconstruct_u(v, prob)
    report = SolveReport(
        energy=J,
        residual=res,
        t_scale=t,
        iterations=it,
        converged=converged,
        barycenter=[float(b) for b in truncated_barycenter(v, prob, math.inf)],
        u_norms={
            "Lp": lp_norm(u, prob.p, prob.grid),
            "sup": lp_norm(u, math.inf, prob.grid),
            "boundary_ratio": boundary_ratio(u),
        },
        trace=trace,
        primal_residual=primal_residual(u, prob),
        eta=prob.eta,
        eps=prob.eps,
        message=message,
    )
    return DualState(v, prob.grid, report), report


def minimize_nehari(prob: DualProblem, v0, opts: SolverOptions | None = None):
    """Minimize ``J`` over the Nehari set from the seed ``v0``.

    Returns ``(DualState, SolveReport)``; ``converged`` is false when
    ``max_iter`` is reached. Raises :class:`NotInUPlus` for a seed with
    ``Q(v0) ≤ 0`` and :class:`StalledLineSearch` when backtracking fails.
    """
    opts = opts or SolverOptions()
    ev = _Evaluator(prob, opts.coordinates == "mirror")
    dv = prob.grid.dv

    def dot(a, b):
        return dv * float(np.vdot(a, b).real)

    v0 = np.asarray(_arr(v0), dtype=float)
    if v0.shape != prob.grid.shape:
        raise PreconditionError(f"seed shape {v0.shape} != grid {prob.grid.shape}")
    x = duality_map(v0, prob.pp) if ev.mirror else v0.copy()
    start = ev.project(x)
    if start is None:
        raise NotInUPlus(f"seed has Q(v0) = {quad_form(v0, prob):.3e} <= 0")
    x, J, Kv, t = start
    g = ev.residual_field(x, Kv)
    res = normalized_residual(ev.to_v(x), g, prob)
    trace = [(0, J, res, 0.0)]
    S: list = []
    Y: list = []
    it = 0
    while res >= opts.tol and it < opts.max_iter:
        d = _two_loop(g, S, Y, dot) if opts.memory > 0 else -g
        grad = ev.metric(x, g)
        slope = dot(grad, d)
        if not slope < 0:
            d = -g
            slope = dot(grad, d)
            S.clear()
            Y.clear()
        accepted = None
        for attempt in range(2):
            step = opts.step0
            for _ in range(opts.max_backtracks):
                trial = ev.project(x + step * d)
                if trial is not None and trial[1] <= J + opts.c1 * step * slope:
                    accepted = trial
                    break
                step *= opts.armijo
            if accepted is not None or not S:
                break
            # quasi-Newton direction failed: fall back to the residual direction
            S.clear()
            Y.clear()
            d = -g
            slope = dot(grad, d)
        if accepted is None:
            state, report = _finish(
                prob, ev.to_v(x), J, res, t, it, False, trace, "line search stalled"
            )
            raise StalledLineSearch(
                f"no acceptable step at iteration {it} (residual {res:.3e})", state, report
            )
        xn, Jn, Kn, t = accepted
        gn = ev.residual_field(xn, Kn)
        s_k, y_k = xn - x, gn - g
        if opts.memory > 0 and dot(s_k, y_k) > 0:
            S.append(s_k)
            Y.append(y_k)
            del S[: -opts.memory]
            del Y[: -opts.memory]
        x, g, J = xn, gn, Jn
        it += 1
        res = normalized_residual(ev.to_v(x), g, prob)
        trace.append((it, J, res, step))
    converged = res < opts.tol
    msg = "converged" if converged else f"max_iter={opts.max_iter} reached"
    return _finish(prob, ev.to_v(x), J, res, t, it, converged, trace, msg)


def solve_dual_problem(prob: DualProblem, opts: SolverOptions | None = None, center=None):
    """Solve from the default seed centered at the weight's first maximizer."""
    return minimize_nehari(prob, default_seed(prob, center), opts)


def limit_problem(params: ModelParameters, grid: TorusGrid, W0: float, eta: float | None = None) -> DualProblem:
    if not W0 > 0:
        raise PreconditionError(f"W0 must be positive, got {W0}")
    return DualProblem.build(params, grid, WeightSpec.constant(W0), eps=1.0, eta=eta)


def solve_limit_problem(
    params: ModelParameters,
    grid: TorusGrid,
    W0: float,
    opts: SolverOptions | None = None,
    eta: float | None = None,
):
    """Ground state of the constant-weight problem ``W ≡ W0``.

    Returns ``(DualState, c0)``; the report is attached to the state.
    """
    prob = limit_problem(params, grid, W0, eta)
    state, report = solve_dual_problem(prob, opts)
    return state, report.energy


@dataclass
class MultistartResult:
    state: DualState | None
    report: SolveReport | None
    seed_index: int
    error: str | None = None


def multistart(prob: DualProblem, seeds, opts: SolverOptions | None = None, width: float | None = None):
    """Solve from each seed and keep one representative per cluster.

    Two outcomes share a cluster when their energies agree within ``1e-4``
    relative and their barycenters (unscaled coordinates) lie within
    ``width`` (default: the weight's characteristic width). Failed seeds are
    recorded with their error message. Returns ``(distinct, all_results)``.
    """
    if width is None:
        width = prob.spec.width if not prob.spec.is_constant else prob.grid.L * prob.eps
    results = []
    for i, seed in enumerate(seeds):
        try:
            state, report = minimize_nehari(prob, seed, opts)
            results.append(MultistartResult(state, report, i))
        except (NotInUPlus, StalledLineSearch) as exc:
            results.append(MultistartResult(getattr(exc, "state", None), getattr(exc, "report", None), i, str(exc)))
    distinct: list[MultistartResult] = []
    for r in results:
        if r.error is not None:
            continue
        for d in distinct:
            de = abs(r.report.energy - d.report.energy) / max(abs(d.report.energy), 1e-300)
            db = float(np.linalg.norm(np.subtract(r.report.barycenter, d.report.barycenter)))
            if de <= 1e-4 and db <= width:
                break
        else:
            distinct.append(r)
    return distinct, results
