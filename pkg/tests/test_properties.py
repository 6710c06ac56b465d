"""Property-based invariants (hypothesis)."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

import folharm as fh
from folharm.serialize import fmt
from folharm.verify import _neville_to_zero

TWO_PI = 2 * np.pi

finite_floats = st.floats(allow_nan=False, allow_infinity=False,
                          min_value=-1e12, max_value=1e12)


@given(finite_floats)
def test_fmt_round_trips_any_float(x):
    assert float(fmt(x)) == x


@given(st.floats(min_value=-100, max_value=100),
       st.floats(min_value=-100, max_value=100),
       st.floats(min_value=-100, max_value=100))
def test_neville_recovers_constant_term_of_quadratic(c0, c1, c2):
    xs = [0.09, 0.04, 0.01]
    ys = [c0 + c1 * x + c2 * x * x for x in xs]
    scale = max(1.0, abs(c0), abs(c1), abs(c2))
    assert abs(_neville_to_zero(xs, ys) - c0) <= 1e-9 * scale


def _geometry_from_label(label):
    return {
        "torus": fh.FlatTorus([TWO_PI, 3.0]),
        "sphere": fh.RoundSphere(radius=1.3, cap_angle=0.5),
        "patch": fh.HyperbolicPatch([-1.5, 1.5], [0.7, 2.5]),
    }[label]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["torus", "sphere", "patch"]),
       st.floats(min_value=0.12, max_value=0.88),
       st.floats(min_value=0.12, max_value=0.88))
def test_curvature_tensor_identities_at_random_points(label, s, t):
    geom = _geometry_from_label(label)
    bounds = np.asarray(geom.chart_bounds)
    p = bounds[:, 0] + np.array([s, t]) * (bounds[:, 1] - bounds[:, 0])
    R = geom.riemann(p)
    assert np.allclose(R, -np.swapaxes(R, -2, -1), atol=1e-10)
    assert np.allclose(R, -np.swapaxes(R, -4, -3), atol=1e-10)
    cyc = (R + np.moveaxis(R, (-3, -2, -1), (-2, -1, -3))
           + np.moveaxis(R, (-3, -2, -1), (-1, -3, -2)))
    assert np.max(np.abs(cyc)) <= 1e-10
    ric = geom.ricci(p)
    assert np.allclose(ric, ric.T, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=-0.9, max_value=0.9),
       st.floats(min_value=-0.9, max_value=0.9),
       st.integers(min_value=-3, max_value=3),
       st.integers(min_value=-3, max_value=3))
def test_torus_exp_is_translation_mod_periods(x, v, kx, kv):
    torus = fh.FlatTorus([TWO_PI])
    p = np.array([x + TWO_PI * kx]) % TWO_PI
    w = np.array([v])
    out = torus.exp(p, w)
    want = p + w
    # compare as circle points: wrap the difference to (-pi, pi]
    diff = (out - want + np.pi) % TWO_PI - np.pi
    assert np.max(np.abs(diff)) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.5, max_value=2.0),
       st.floats(min_value=-1.0, max_value=1.0))
def test_quadrature_is_linear_and_monotone(scale, shift):
    grid = fh.build_grid(fh.FlatTorus([TWO_PI]), 32)
    f = np.sin(grid.points[..., 0]) ** 2
    base = fh.integrate(grid, f)
    combined = fh.integrate(grid, scale * f + shift)
    assert np.isclose(combined, scale * base + shift * TWO_PI, atol=1e-10)
    assert fh.integrate(grid, np.abs(f)) >= 0


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=-2, max_value=2),
       st.integers(min_value=-2, max_value=2),
       st.integers(min_value=-2, max_value=2),
       st.integers(min_value=-2, max_value=2))
def test_composed_winding_is_matrix_product(a, b, c, d):
    torus = fh.FlatTorus([TWO_PI, TWO_PI])
    grid = fh.build_grid(torus, 16)
    phi = fh.make_family("linear", torus, torus,
                         {"matrix": [[1, 0], [0, 1]]}).realize(grid)
    psi = fh.make_family("linear", torus, torus, {"matrix": [[a, b], [c, d]]})
    comp = fh.compose(phi, psi)
    assert np.array_equal(comp.winding, np.array([[a, b], [c, d]]))


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.01, max_value=0.3),
       st.integers(min_value=1, max_value=3))
def test_linear_maps_have_zero_tension(amp, k):
    """Affine torus maps are transversally harmonic regardless of slope."""
    torus = fh.FlatTorus([TWO_PI, TWO_PI])
    grid = fh.build_grid(torus, 16)
    mapf = fh.make_family("linear", torus, torus,
                          {"matrix": [[k, 0], [0, 1]],
                           "offset": [amp, -amp]}).realize(grid)
    assert fh.tension_sup_norm(mapf) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=1.2, max_value=4.0),
       st.floats(min_value=0.0, max_value=TWO_PI))
def test_mean_curvature_matches_volume_profile(offset, _shift):
    torus = fh.FlatTorus([TWO_PI])
    grid = fh.build_grid(torus, 32)
    struct = fh.named_profile("cosine_offset", 1, {"offset": offset})
    assert fh.check_lemma_volume(grid, struct) <= 1e-12
