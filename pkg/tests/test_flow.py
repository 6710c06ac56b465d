"""Heat flow: descent, convergence, stopping rules, rigidity diagnostics."""

import numpy as np
import pytest

import folharm as fh

TWO_PI = 2 * np.pi


def _circle_flow(n=64, amp=0.5, **cfg):
    grid = fh.build_grid(fh.FlatTorus([TWO_PI]), n)
    fam = fh.make_family("sine_perturbation", grid.geometry, grid.geometry,
                         {"modes": [[0, [1], amp, 0.0]]})
    return fh.run_flow(fam.realize(grid), None, fh.FlowConfig(**cfg))


def test_cfl_step_flat_grid():
    grid = fh.build_grid(fh.FlatTorus([TWO_PI]), 64)
    h = TWO_PI / 64
    assert np.isclose(fh.cfl_step(grid), h * h / 2)


def test_energy_decreases_monotonically():
    final, trace = _circle_flow(n=64, tension_tol=1e-6)
    assert trace.termination == "tension_tol"
    assert all(b <= a + 1e-14 for a, b in zip(trace.energy, trace.energy[1:]))


def test_flow_converges_to_harmonic_limit():
    final, trace = _circle_flow(n=64, tension_tol=1e-6)
    assert fh.tension_sup_norm(final) <= 1e-6
    # harmonic maps of the flat circle are affine; limit energy is pi
    assert abs(trace.energy[-1] - np.pi) <= 1e-3


def test_stationary_start_terminates_immediately():
    grid = fh.build_grid(fh.FlatTorus([TWO_PI]), 32)
    mapf = fh.make_family("identity", grid.geometry, grid.geometry).realize(grid)
    final, trace = fh.run_flow(mapf, None, fh.FlowConfig(tension_tol=1e-10))
    assert trace.steps[-1] == 0
    assert trace.termination == "tension_tol"
    assert np.array_equal(final.values, mapf.values)


def test_max_steps_termination():
    _, trace = _circle_flow(n=64, tension_tol=1e-14, max_steps=5)
    assert trace.termination == "max_steps"
    assert trace.steps[-1] == 5


def test_oversized_step_without_backtracking_rejected():
    grid = fh.build_grid(fh.FlatTorus([TWO_PI]), 64)
    fam = fh.make_family("sine_perturbation", grid.geometry, grid.geometry, {})
    with pytest.raises(fh.ConfigurationError):
        fh.run_flow(fam.realize(grid), None,
                    fh.FlowConfig(dt=1.0, energy_backtrack=False))


def test_backtracking_recovers_from_large_dt():
    """An unstable step size halves until the energy decreases again."""
    final, trace = _circle_flow(n=32, amp=0.3, dt=0.05, tension_tol=1e-5)
    assert trace.termination == "tension_tol"
    assert all(b <= a + 1e-14 for a, b in zip(trace.energy, trace.energy[1:]))


def test_fixed_boundary_nodes_do_not_move(patch):
    grid = fh.build_grid(patch, 16)
    rng = np.random.default_rng(3)
    values = np.stack([
        0.2 * rng.standard_normal(grid.shape),
        1.5 + 0.2 * rng.standard_normal(grid.shape),
    ], axis=-1)
    mapf = fh.FoliatedMapField(grid, patch, values)
    stepped = fh.flow_step(mapf, None, 1e-3)
    for a, end in ((0, 0), (0, -1), (1, 0), (1, -1)):
        idx = [slice(None)] * 2
        idx[a] = end
        assert np.array_equal(stepped.values[tuple(idx)], values[tuple(idx)])


def test_transversal_energy_measure_cancellation(torus1):
    grid = fh.build_grid(torus1, 64)
    fam = fh.make_family("sine_perturbation", grid.geometry, grid.geometry, {})
    mapf = fam.realize(grid)
    struct = fh.named_profile("cosine_offset", 1, {"offset": 2.0})
    E = fh.transversal_energy(mapf, struct, check_cancellation=True)
    assert E > 0


# -- rigidity diagnostics --------------------------------------------------


def test_sphere_identity_diagnostics(sphere):
    grid = fh.build_grid(sphere, 48)
    mapf = fh.make_family("identity", sphere, sphere).realize(grid)
    diag = fh.rigidity_diagnostics(mapf, None, rank_cap=2)
    assert abs(diag.lam - 1.0) <= 1e-9
    assert abs(diag.mu - 1.0) <= 1e-9
    assert diag.rank_T == 2
    assert abs(diag.bound_value - 2.0) <= 1e-9
    assert abs(diag.max_dT_norm_sq - 2.0) <= 1e-9
    assert diag.verdict == fh.Verdict.totally_geodesic


def test_constant_map_is_transversally_constant(sphere):
    grid = fh.build_grid(fh.FlatTorus([TWO_PI, TWO_PI]), 16)
    mapf = fh.make_family("constant", grid.geometry, sphere).realize(grid)
    diag = fh.rigidity_diagnostics(mapf, None, rank_cap=2)
    assert diag.verdict == fh.Verdict.transversally_constant
    assert diag.max_dT_norm_sq <= 1e-20


def test_diagnostics_require_near_harmonic_input():
    grid = fh.build_grid(fh.FlatTorus([TWO_PI]), 32)
    fam = fh.make_family("sine_perturbation", grid.geometry, grid.geometry,
                         {"amplitude": 0.3})
    with pytest.raises(fh.PreconditionError):
        fh.rigidity_diagnostics(fam.realize(grid), None, rank_cap=2)


def test_diagnostics_rank_cap_validation(sphere):
    grid = fh.build_grid(sphere, 16)
    mapf = fh.make_family("identity", sphere, sphere).realize(grid)
    with pytest.raises(fh.ConfigurationError):
        fh.rigidity_diagnostics(mapf, None, rank_cap=1)


def test_positive_curvature_bound_violation(sphere):
    """A sphere identity scaled question: the flat-torus identity violates no
    bound (mu = 0 gives an infinite bound), and the report says so."""
    grid = fh.build_grid(fh.FlatTorus([TWO_PI, TWO_PI]), 16)
    mapf = fh.make_family("identity", grid.geometry, grid.geometry).realize(grid)
    diag = fh.rigidity_diagnostics(mapf, None, rank_cap=2)
    assert diag.bound_value == np.inf
    assert diag.verdict in (fh.Verdict.totally_geodesic,
                            fh.Verdict.transversally_constant)
