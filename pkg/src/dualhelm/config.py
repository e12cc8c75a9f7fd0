"""YAML run configuration: parsing, defaults and validation.

Layout (all sections optional except ``model``)::

    mode: limit                 # or given by the CLI subcommand
    model: {N: 3, alpha: -1.0, beta: 0.0, p: 5.0}
    grid: {n: 64, L: auto, eta: auto, wavelengths: 8}
    weight: {kind: gaussian_bumps, centers: [[0.3, 0.2, 0.1]],
             heights: [1.0], widths: [0.5], floor: 0.3}
    sweep: {eps_list: [0.25, 0.125, 0.0625]}   # or k_list, or eps
    solver: {tol: 1.0e-7, max_iter: 5000, memory: 8, seed_center: null}
    experiment: {nu: null, delta: null, rho: null, r_list: null, radius: 1.0,
                 dimensions: null}
    output: {directory: ., label: null, formats: [csv, yaml, field]}
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from pathlib import Path

import yaml

from .dual import WeightSpec, default_eta
from .errors import DualHelmError, ParameterError, ParseError, PreconditionError, ValidationError
from .regime import ModelParameters
from .resolvent import TorusGrid
from .solver import SolverOptions

MODES = ("solve", "limit", "energy-comparison", "concentration", "multiplicity", "offdiag", "kernel-bounds")
FORMATS = ("csv", "yaml", "field")

DEFAULTS = {
    "grid": {"n": None, "L": "auto", "eta": "auto", "wavelengths": 8.0},
    "weight": {"kind": "constant", "value": 1.0},
    "sweep": {"eps": None, "eps_list": None, "k_list": None},
    "solver": {
        "tol": 1e-7,
        "max_iter": 5000,
        "armijo": 0.5,
        "c1": 1e-4,
        "step0": 1.0,
        "memory": 8,
        "coordinates": "mirror",
        "seed_center": None,
    },
    "experiment": {"nu": None, "delta": None, "rho": None, "r_list": None, "radius": 1.0, "dimensions": None},
    "output": {"directory": ".", "label": None, "formats": list(FORMATS)},
}
SECTIONS = ("mode", "model") + tuple(DEFAULTS)
MODEL_KEYS = ("N", "alpha", "beta", "p")
WEIGHT_KEYS = ("kind", "value", "centers", "heights", "widths", "floor", "radius")


@dataclass
class RunConfig:
    mode: str
    params: ModelParameters
    grid: TorusGrid
    eta: float
    weight: WeightSpec
    eps_list: list
    solver: SolverOptions
    seed_center: list | None
    experiment: dict
    output: dict
    resolved: dict

    @property
    def eps(self) -> float:
        return self.eps_list[0]


def _number(section: str, key: str, value, kind=float, positive=False, allow_none=False):
    name = f"{section}.{key}"
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(name, f"expected a number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ValidationError(name, f"expected an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
        if not math.isfinite(value):
            raise ValidationError(name, "must be finite")
    if positive and not value > 0:
        raise ValidationError(name, f"must be positive, got {value}")
    return value


def _section(raw: dict, name: str) -> dict:
    sec = raw.get(name)
    if sec is None:
        sec = {}
    if not isinstance(sec, dict):
        raise ValidationError(name, "must be a mapping")
    allowed = MODEL_KEYS if name == "model" else (WEIGHT_KEYS if name == "weight" else tuple(DEFAULTS[name]))
    unknown = sorted(set(sec) - set(allowed))
    if unknown:
        raise ValidationError(name, f"unknown keys {unknown}")
    return sec


def load_yaml(text: str) -> dict:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None) or getattr(exc, "context_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise ParseError(str(problem), line) from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ParseError("top level must be a mapping of sections", 1)
    return raw


def parse_config(path, mode: str | None = None, out: str | None = None, label: str | None = None) -> RunConfig:
    text = Path(path).read_text()
    return build_config(load_yaml(text), mode=mode, out=out, label=label)


def build_config(raw: dict, mode: str | None = None, out: str | None = None, label: str | None = None) -> RunConfig:
    raw = copy.deepcopy(raw)
    unknown = sorted(set(raw) - set(SECTIONS))
    if unknown:
        raise ValidationError("config", f"unknown sections {unknown}")

    file_mode = raw.get("mode")
    if mode is not None and file_mode is not None and file_mode != mode:
        raise ValidationError("mode", f"config says {file_mode!r} but {mode!r} was requested")
    mode = mode or file_mode
    if mode not in MODES:
        raise ValidationError("mode", f"must be one of {list(MODES)}, got {mode!r}")

    # model
    m = _section(raw, "model")
    missing = [k for k in MODEL_KEYS if k not in m]
    if missing:
        raise ValidationError("model", f"missing keys {missing}")
    N = _number("model", "N", m["N"], int)
    alpha = _number("model", "alpha", m["alpha"])
    beta = _number("model", "beta", m["beta"])
    p = _number("model", "p", m["p"])
    try:
        params = ModelParameters(N, alpha, beta, p)
    except ParameterError as exc:
        field = "model.p" if "window" in str(exc) else "model"
        raise ValidationError(field, f"{type(exc).__name__}: {exc}") from None

    # grid
    g = {**DEFAULTS["grid"], **_section(raw, "grid")}
    wavelengths = _number("grid", "wavelengths", g["wavelengths"], positive=True)
    n = _number("grid", "n", g["n"], int, positive=True, allow_none=True)
    try:
        grid = TorusGrid.auto(params.roots, N, n, wavelengths)
        if g["L"] != "auto":
            grid = TorusGrid(_number("grid", "L", g["L"], positive=True), grid.n, N)
    except PreconditionError as exc:
        raise ValidationError("grid", str(exc)) from None
    if g["eta"] == "auto":
        eta = default_eta(params)
    else:
        eta = _number("grid", "eta", g["eta"])
        if eta < 0:
            raise ValidationError("grid.eta", "must be >= 0")

    # weight
    w = _section(raw, "weight") or dict(DEFAULTS["weight"])
    try:
        kind = w.get("kind", "constant")
        if kind == "constant":
            weight = WeightSpec.constant(_number("weight", "value", w.get("value", 1.0), positive=True))
        elif kind == "gaussian_bumps":
            weight = WeightSpec.bumps(
                w.get("centers", []), w.get("heights", 1.0), w.get("widths", 1.0), w.get("floor", 0.0)
            )
        elif kind == "plateau":
            cs = w.get("centers", [])
            weight = WeightSpec.plateau(
                cs[0] if cs else [0.0] * N,
                _first(w.get("heights", 1.0)),
                w.get("radius", 1.0),
                _first(w.get("widths", 1.0)),
                w.get("floor", 0.0),
            )
        else:
            raise ValidationError("weight.kind", f"must be constant, gaussian_bumps or plateau, got {kind!r}")
    except (PreconditionError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError("weight", str(exc)) from None
    if not weight.is_constant and weight.dim != N:
        raise ValidationError("weight.centers", f"centers must have {N} coordinates")

    # sweep
    s = {**DEFAULTS["sweep"], **_section(raw, "sweep")}
    given = [k for k in ("eps", "eps_list", "k_list") if s[k] is not None]
    if len(given) > 1:
        raise ValidationError("sweep", f"eps, eps_list and k_list are mutually exclusive, got {given}")
    if s["k_list"] is not None:
        eps_list = [1.0 / _number("sweep", "k_list", k, positive=True) for k in _as_list("sweep.k_list", s["k_list"])]
    elif s["eps_list"] is not None:
        eps_list = [_number("sweep", "eps_list", e, positive=True) for e in _as_list("sweep.eps_list", s["eps_list"])]
    elif s["eps"] is not None:
        eps_list = [_number("sweep", "eps", s["eps"], positive=True)]
    else:
        eps_list = [1.0] if mode in ("solve", "multiplicity") else [0.25, 0.125, 0.0625]
    if mode in ("energy-comparison", "concentration"):
        if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
            raise ValidationError("sweep.eps_list", "must be strictly decreasing")
    if mode == "concentration" and weight.is_constant:
        raise ValidationError("weight", "concentration sweep rejects constant weights (M would be the whole space)")

    # solver
    so = {**DEFAULTS["solver"], **_section(raw, "solver")}
    seed_center = so.pop("seed_center")
    if seed_center is not None:
        seed_center = [_number("solver", "seed_center", c) for c in _as_list("solver.seed_center", seed_center)]
        if len(seed_center) != N:
            raise ValidationError("solver.seed_center", f"needs {N} coordinates")
    try:
        solver = SolverOptions(
            tol=_number("solver", "tol", so["tol"], positive=True),
            max_iter=_number("solver", "max_iter", so["max_iter"], int),
            armijo=_number("solver", "armijo", so["armijo"]),
            c1=_number("solver", "c1", so["c1"]),
            step0=_number("solver", "step0", so["step0"], positive=True),
            memory=_number("solver", "memory", so["memory"], int),
            coordinates=so["coordinates"],
        )
    except PreconditionError as exc:
        raise ValidationError("solver", str(exc)) from None

    # experiment
    ex = {**DEFAULTS["experiment"], **_section(raw, "experiment")}
    for key in ("nu", "delta", "rho"):
        ex[key] = _number("experiment", key, ex[key], positive=True, allow_none=True)
    ex["radius"] = _number("experiment", "radius", ex["radius"], positive=True)
    if ex["r_list"] is not None:
        ex["r_list"] = [_number("experiment", "r_list", r, positive=True) for r in _as_list("experiment.r_list", ex["r_list"])]
    if ex["dimensions"] is not None:
        ex["dimensions"] = [_number("experiment", "dimensions", d, int) for d in _as_list("experiment.dimensions", ex["dimensions"])]

    # output
    o = {**DEFAULTS["output"], **_section(raw, "output")}
    if out is not None:
        o["directory"] = out
    if label is not None:
        o["label"] = label
    if o["label"] is None:
        o["label"] = mode
    o["directory"] = str(o["directory"])
    o["label"] = str(o["label"])
    fm = _as_list("output.formats", o["formats"])
    bad = sorted(set(fm) - set(FORMATS))
    if bad:
        raise ValidationError("output.formats", f"unknown formats {bad}")
    o["formats"] = list(fm)

    resolved = {
        "mode": mode,
        "model": {"N": N, "alpha": alpha, "beta": beta, "p": p, "regime": params.regime.value,
                  "a1": params.roots.a1, "a2": params.roots.a2},
        "grid": {"n": grid.n, "L": grid.L, "eta": eta, "wavelengths": wavelengths},
        "weight": weight.to_dict(),
        "sweep": {"eps_list": eps_list},
        "solver": {
            "tol": solver.tol,
            "max_iter": solver.max_iter,
            "armijo": solver.armijo,
            "c1": solver.c1,
            "step0": solver.step0,
            "memory": solver.memory,
            "coordinates": solver.coordinates,
            "seed_center": seed_center,
        },
        "experiment": ex,
        "output": o,
    }
    return RunConfig(mode, params, grid, eta, weight, eps_list, solver, seed_center, ex, o, resolved)


def _first(value):
    return value[0] if isinstance(value, (list, tuple)) and value else value


def _as_list(name: str, value) -> list:
    if isinstance(value, (list, tuple)):
        return list(value)
    raise ValidationError(name, f"expected a list, got {value!r}")


__all__ = ["RunConfig", "parse_config", "build_config", "load_yaml", "MODES", "DualHelmError"]
