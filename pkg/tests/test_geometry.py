"""Closed-form geometry catalog: metrics, curvature, exponential maps."""

import numpy as np
import pytest

import folharm as fh
from conftest import interior_points
from oracles import rk4_geodesic

RNG = np.random.default_rng(20240817)


# -- metric and Christoffel symbols ---------------------------------------


def test_metrics_are_symmetric_positive_definite(all_geometries):
    for geom in all_geometries:
        pts = interior_points(geom, RNG, 50)
        g = geom.metric(pts)
        assert np.allclose(g, np.swapaxes(g, -1, -2), atol=1e-14)
        assert np.all(np.linalg.eigvalsh(g) > 0)


def test_christoffel_symmetric_in_lower_indices(all_geometries):
    for geom in all_geometries:
        pts = interior_points(geom, RNG, 50)
        gam = geom.christoffel(pts)
        assert np.allclose(gam, np.swapaxes(gam, -1, -2), atol=1e-14)


def test_christoffel_matches_metric_derivatives(all_geometries):
    """Gamma^c_ab = 1/2 g^{cd}(d_a g_db + d_b g_da - d_d g_ab), by central FD."""
    h = 1e-6
    for geom in all_geometries:
        for p in interior_points(geom, RNG, 10):
            q = geom.dim
            dg = np.zeros((q, q, q))   # dg[d, a, b] = d_d g_ab
            for d in range(q):
                e = np.zeros(q)
                e[d] = h
                dg[d] = (geom.metric(p + e) - geom.metric(p - e)) / (2 * h)
            gi = np.linalg.inv(geom.metric(p))
            expected = np.zeros((q, q, q))
            for c in range(q):
                for a in range(q):
                    for b in range(q):
                        for d in range(q):
                            expected[c, a, b] += 0.5 * gi[c, d] * (
                                dg[a, d, b] + dg[b, d, a] - dg[d, a, b]
                            )
            assert np.allclose(geom.christoffel(p), expected, atol=1e-8)


# -- curvature -------------------------------------------------------------


def test_riemann_tensor_symmetries_and_first_bianchi(all_geometries):
    for geom in all_geometries:
        pts = interior_points(geom, RNG, 100)
        R = geom.riemann(pts)
        # antisymmetry in both index pairs, pair-swap symmetry
        assert np.allclose(R, -np.swapaxes(R, -4, -3), atol=1e-10)
        assert np.allclose(R, -np.swapaxes(R, -2, -1), atol=1e-10)
        assert np.allclose(R, np.moveaxis(R, (-4, -3, -2, -1), (-2, -1, -4, -3)),
                           atol=1e-10)
        # first Bianchi identity: R_{a[bcd]} cyclic sum vanishes
        cyc = (
            R
            + np.moveaxis(R, (-3, -2, -1), (-2, -1, -3))
            + np.moveaxis(R, (-3, -2, -1), (-1, -3, -2))
        )
        assert np.max(np.abs(cyc)) <= 1e-10


def test_ricci_is_contraction_of_riemann(all_geometries):
    for geom in all_geometries:
        pts = interior_points(geom, RNG, 30)
        R = geom.riemann(pts)
        gi = np.linalg.inv(geom.metric(pts))
        expected = np.einsum("...ad,...abcd->...bc", gi, R)
        assert np.allclose(geom.ricci(pts), expected, atol=1e-12)


def test_sectional_curvature_constants(torus2, sphere, patch):
    rng = np.random.default_rng(7)
    for geom, K in ((torus2, 0.0), (sphere, 1.0), (patch, -1.0)):
        for p in interior_points(geom, rng, 20):
            X, Y = rng.standard_normal(2), rng.standard_normal(2)
            k = geom.sectional(p, X, Y)
            assert abs(k - K) <= 1e-10


def test_sphere_radius_scales_curvature():
    s = fh.RoundSphere(radius=2.0, cap_angle=0.4)
    p = np.array([np.pi / 2, 0.3])
    assert abs(s.sectional(p, [1.0, 0.0], [0.0, 1.0]) - 0.25) <= 1e-12
    ric = s.ricci(p)
    assert np.allclose(ric, 0.25 * s.metric(p), atol=1e-12)


# -- exponential maps ------------------------------------------------------


def test_exp_matches_geodesic_reintegration(all_geometries):
    """Closed-form exp against an independent RK4 geodesic integrator."""
    rng = np.random.default_rng(101)
    for geom in all_geometries:
        for p in interior_points(geom, rng, 8):
            v = 0.25 * rng.standard_normal(geom.dim)
            n = geom.norm(p, v)
            if n > 0.8 * geom.injectivity_cap:
                v *= 0.8 * geom.injectivity_cap / n
            got = geom.exp(p, v, reduce=False)
            want = rk4_geodesic(geom, p, v, nsteps=400)
            if not np.all(geom.contains(want)):
                continue
            assert np.max(np.abs(got - want)) <= 1e-8


def test_exp_known_values(torus1, sphere, patch):
    assert np.allclose(torus1.exp([0.5], [0.7]), [1.2], atol=1e-14)
    out = sphere.exp([np.pi / 2, 0.0], [0.0, 1.0])
    assert np.allclose(out, [np.pi / 2, 1.0], atol=1e-12)
    out = patch.exp([0.0, 1.0], [0.0, 1.0])
    assert np.allclose(out, [0.0, np.e], atol=1e-12)


def test_exp_zero_vector_is_identity(all_geometries):
    for geom in all_geometries:
        pts = interior_points(geom, RNG, 20)
        out = geom.exp(pts, np.zeros_like(pts), reduce=False)
        assert np.allclose(out, pts, atol=1e-14)


def test_exp_norm_preservation(all_geometries):
    """|exp_p(tv) - curve| has speed |v|: check via midpoint re-expansion."""
    rng = np.random.default_rng(23)
    for geom in all_geometries:
        for p in interior_points(geom, rng, 5):
            v = 0.3 * rng.standard_normal(geom.dim)
            half = geom.exp(p, 0.5 * v, reduce=False)
            if not np.all(geom.contains(half)):
                continue
            full = geom.exp(p, v, reduce=False)
            refull = rk4_geodesic(geom, half, 0.5 * _transport(geom, p, half, v), 200)
            # geodesic segment property holds within integrator error
            if np.all(geom.contains(full)) and np.all(geom.contains(refull)):
                assert np.max(np.abs(full - refull)) <= 1e-6


def _transport(geom, p, mid, v):
    """Velocity of the geodesic t -> exp_p(tv) at the midpoint, by FD."""
    eps = 1e-6
    a = geom.exp(p, (0.5 + eps) * v, reduce=False)
    b = geom.exp(p, (0.5 - eps) * v, reduce=False)
    return (a - b) / (2 * eps)


def test_exp_rejects_steps_beyond_injectivity_cap(sphere):
    with pytest.raises(fh.StepTooLargeError):
        sphere.exp([np.pi / 2, 0.0], [0.0, 10.0])


def test_torus_exp_reduces_into_fundamental_domain(torus2):
    p = np.array([0.1, 0.2])
    v = np.array([0.3, -0.4])
    reduced = torus2.exp(np.array([0.1 + 2 * np.pi, 0.2]), v)
    assert np.allclose(reduced, torus2.exp(p, v), atol=1e-12)


# -- construction and validation ------------------------------------------


def test_build_geometry_round_trip(torus2, sphere, patch):
    built = fh.build_geometry({"kind": "flat_torus", "periods": list(torus2.periods)})
    assert isinstance(built, fh.FlatTorus)
    built = fh.build_geometry({"kind": "round_sphere", "radius": 1.0, "cap_angle": 0.4})
    assert isinstance(built, fh.RoundSphere)
    built = fh.build_geometry(
        {"kind": "hyperbolic_patch", "x_bounds": [-2, 2], "y_bounds": [0.5, 3.0]}
    )
    assert isinstance(built, fh.HyperbolicPatch)


def test_build_geometry_rejects_bad_specs():
    with pytest.raises(fh.ConfigurationError):
        fh.build_geometry({"kind": "klein_bottle"})
    with pytest.raises(fh.ConfigurationError):
        fh.build_geometry({"kind": "flat_torus", "periods": [-1.0]})
    with pytest.raises(fh.ConfigurationError):
        fh.build_geometry({"kind": "flat_torus", "periods": [1.0], "extra": 2})
    with pytest.raises(fh.ConfigurationError):
        fh.build_geometry({"kind": "hyperbolic_patch", "x_bounds": [0, 1],
                           "y_bounds": [-1.0, 2.0]})


def test_domain_validation(sphere, patch):
    with pytest.raises(fh.DomainError):
        sphere.require_valid(np.array([0.01, 0.0]))   # inside the polar cap
    with pytest.raises(fh.DomainError):
        patch.require_valid(np.array([0.0, 10.0]))


def test_local_geometry_at_sphere_equator(sphere):
    loc = fh.geometry_at(sphere, [np.pi / 2, 0.3])
    assert np.allclose(loc.g, np.eye(2), atol=1e-14)
    assert np.allclose(loc.ricci, np.eye(2), atol=1e-12)
    assert abs(loc.sectional([1.0, 0.0], [0.0, 1.0]) - 1.0) <= 1e-12
