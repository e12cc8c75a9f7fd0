import math

import numpy as np
import pytest
import yaml

from dualhelm.dual import DualProblem, WeightSpec, energy, gradient, nehari_energy, quad_form
from dualhelm.errors import NotInUPlus, PreconditionError, StalledLineSearch
from dualhelm.regime import ModelParameters
from dualhelm.resolvent import TorusGrid, inner
from dualhelm.solver import (
    SolverOptions,
    boundary_ratio,
    default_seed,
    minimize_nehari,
    multistart,
    primal_residual,
    radial_wave,
    reconstruct_u,
    seed_center,
    solve_dual_problem,
    solve_limit_problem,
)


@pytest.fixture(scope="module")
def limit(params3, small_grid3):
    return solve_limit_problem(params3, small_grid3, 1.0)


def test_limit_solution_is_critical(limit):
    state, c0 = limit
    rep = state.report
    assert rep.converged and rep.residual < 1e-7
    assert rep.energy == c0 > 0
    prob = DualProblem.build(_p(), state.grid, WeightSpec.constant(1.0))
    g = gradient(state.samples, prob)
    assert inner(g, state.samples, prob.grid) == pytest.approx(0.0, abs=1e-8 * prob.norm_pp(state.samples))
    assert nehari_energy(state.samples, prob) == pytest.approx(c0, rel=1e-10)
    assert prob.norm_pp(state.samples) == pytest.approx(quad_form(state.samples, prob), rel=1e-8)
    assert rep.trace[0][0] == 0 and rep.trace[-1][0] == rep.iterations


def _p():
    return ModelParameters(3, -1.0, 0.0, 5.0)


def test_energy_monotone_along_trace(limit):
    energies = [row[1] for row in limit[0].report.trace]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(energies, energies[1:]))


def test_primal_reconstruction(limit, params3):
    state, _ = limit
    prob = DualProblem.build(params3, state.grid, WeightSpec.constant(1.0))
    u = reconstruct_u(state, prob)
    assert primal_residual(u, prob) == pytest.approx(state.report.primal_residual)
    # coarse grid: the residual still sits well below the O(1) scale
    assert state.report.primal_residual < 1e-5


def test_direct_coordinates_agree(limit, params3, small_grid3):
    _, c0 = limit
    _, c_direct = solve_limit_problem(params3, small_grid3, 1.0, SolverOptions(coordinates="direct", tol=1e-6))
    assert c_direct == pytest.approx(c0, rel=1e-4)


def test_scaling_law_small_grid(limit, params3, small_grid3):
    _, c1 = limit
    _, c2 = solve_limit_problem(params3, small_grid3, 2.0)
    assert c2 / c1 == pytest.approx(2 ** (-2 / 3), rel=1e-6)


def test_non_convergence_is_reported(params3, small_grid3):
    prob = DualProblem.build(params3, small_grid3, WeightSpec.constant(1.0))
    state, rep = solve_dual_problem(prob, SolverOptions(max_iter=2))
    assert not rep.converged and rep.iterations == 2 and "max_iter" in rep.message


def _inside_shell(grid):
    return grid.ifft(np.where(grid.freq_sq < 0.5, 1.0 + 0j, 0))


def test_seed_outside_uplus(params3, small_grid3):
    prob = DualProblem.build(params3, small_grid3, WeightSpec.constant(1.0))
    with pytest.raises(NotInUPlus):
        minimize_nehari(prob, _inside_shell(small_grid3))
    with pytest.raises(PreconditionError):
        minimize_nehari(prob, np.ones((4, 4, 4)))


def test_stalled_line_search(params3, small_grid3):
    prob = DualProblem.build(params3, small_grid3, WeightSpec.constant(1.0))
    opts = SolverOptions(max_backtracks=1, step0=1e3, armijo=0.5)
    with pytest.raises(StalledLineSearch) as info:
        minimize_nehari(prob, default_seed(prob), opts)
    assert info.value.report is not None and not info.value.report.converged


def test_options_validation():
    with pytest.raises(PreconditionError):
        SolverOptions(coordinates="polar")
    with pytest.raises(PreconditionError):
        SolverOptions(armijo=1.5)


def test_radial_wave():
    r = np.array([0.0, 1.0, 2.0])
    assert radial_wave(r, 1.0, 3) == pytest.approx([1.0, math.sin(1.0), math.sin(2.0) / 2])
    assert radial_wave(r, 1.0, 2)[0] == 1.0


def test_seed_center_and_default_seed(params3, small_grid3):
    spec = WeightSpec.bumps([(0.3, 0.2, 0.1)], 1.0, 0.5, floor=0.3)
    prob = DualProblem.build(params3, small_grid3, spec, eps=0.25)
    c = seed_center(prob)
    h = small_grid3.h
    assert np.allclose(c / h, np.round(c / h))
    assert np.all(np.abs(c - np.array([1.2, 0.8, 0.4])) <= h / 2 + 1e-12)
    v0 = default_seed(prob)
    assert energy(v0, prob) == energy(v0, prob)


def test_boundary_ratio():
    u = np.zeros((5, 5))
    u[2, 2] = 2.0
    u[0, 3] = 0.5
    assert boundary_ratio(u) == 0.25
    assert boundary_ratio(np.zeros((3, 3))) == 0.0


def test_report_serialization(limit):
    rep = limit[0].report
    doc = yaml.safe_load(rep.to_yaml())
    assert doc["converged"] is True
    assert doc["trace"].splitlines()[0] == "iteration,energy,residual,step"
    assert len(rep.trace_csv().splitlines()) == rep.iterations + 2
    assert set(doc["u_norms"]) == {"Lp", "sup", "boundary_ratio"}


def test_multistart_clusters_translates(params3, small_grid3):
    prob = DualProblem.build(params3, small_grid3, WeightSpec.constant(1.0))
    shifted = np.roll(default_seed(prob), 1, axis=0)
    seeds = [default_seed(prob), shifted, _inside_shell(small_grid3)]
    distinct, results = multistart(prob, seeds)
    assert len(results) == 3 and results[2].error is not None
    assert len(distinct) == 1


@pytest.mark.slow
def test_default_grid_refinement(params3):
    """Doubling the resolution on the default box moves c0 by under 1%."""
    coarse = TorusGrid.auto(params3.roots, 3)
    fine = TorusGrid(L=coarse.L, n=2 * coarse.n, N=3)
    _, c_coarse = solve_limit_problem(params3, coarse, 1.0)
    _, c_fine = solve_limit_problem(params3, fine, 1.0)
    assert abs(c_fine - c_coarse) / c_fine < 0.01
