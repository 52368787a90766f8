import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate

from franson import hidden
from franson.analysis import ks_bound, ks_statistic
from franson.angles import circular_distance, wrap_phase
from franson.hidden import (
    BoundaryProximityError,
    BranchConsistencyError,
    Shape,
    arccos_argument,
    branch_sign,
    breakpoints,
    density,
    effective_phase,
    phase_cdf,
    pushforward_residual,
    sample_phase,
    transform,
)

PI = math.pi
circle = st.floats(-PI, PI, exclude_max=True)


def literal_transform(phi, dtilde):
    """Direct form q * arccos(argument), principal branch, no half-angle rewrite."""
    a = np.clip(arccos_argument(phi, dtilde), -1.0, 1.0)
    return wrap_phase(branch_sign(phi, dtilde) * np.arccos(a))


# --- density and sampling --------------------------------------------------


@pytest.mark.parametrize("phi, expected", [(PI / 2, 0.25), (0.0, 0.0), (-PI / 6, 0.125)])
def test_density_examples(phi, expected):
    assert density(phi) == pytest.approx(expected, abs=1e-15)


def test_density_normalisation_quadrature():
    x = np.linspace(-PI, PI, 10_001)
    assert integrate.simpson(density(x), x=x) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(circle)
def test_cdf_is_integral_of_density(phi):
    area, _ = integrate.quad(density, -PI, phi, points=[0.0] if phi > 0 else None)
    assert phase_cdf(phi) == pytest.approx(area, abs=1e-10)


@pytest.mark.parametrize("u, expected", [(0.5, 0.0), (0.25, -PI / 2), (0.0, -PI), (0.75, PI / 2)])
def test_sample_phase_examples(u, expected):
    assert sample_phase(u) == pytest.approx(expected, abs=1e-12)


def test_sample_phase_near_lower_endpoint():
    assert sample_phase(1e-12) == pytest.approx(-PI, abs=1e-5)
    assert sample_phase(1e-12) > -PI


@pytest.mark.parametrize("u", [-0.1, 1.0, 1.5, float("nan")])
def test_sample_phase_rejects_bad_variates(u):
    with pytest.raises(ValueError):
        sample_phase(u)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.0, 1.0, exclude_max=True))
def test_sample_phase_inverts_cdf(u):
    phi = sample_phase(u)
    assert -PI <= phi < PI
    assert phase_cdf(phi) == pytest.approx(u, abs=1e-9)


def test_sampler_ks_moderate_n():
    n = 200_000
    samples = sample_phase(np.random.default_rng(4).random(n))
    assert ks_statistic(samples) <= ks_bound(n)


def test_detector_halves_are_equiprobable():
    assert phase_cdf(0.0) == 0.5


# --- branch sign and transform ---------------------------------------------


@pytest.mark.parametrize(
    "phi, dtilde, expected",
    [(0.0, PI / 3, -1), (PI / 2, PI / 3, 1), (1.234, 1.234, 1), (-3.0, 2.0, 1), (3.0, -2.0, -1)],
)
def test_branch_sign_examples(phi, dtilde, expected):
    assert branch_sign(phi, dtilde) == expected


@pytest.mark.parametrize(
    "phi, dtilde, expected",
    [(0.0, PI / 3, -PI / 3), (PI / 2, PI / 3, PI / 3), (PI / 3, PI / 3, 0.0)],
)
def test_transform_examples(phi, dtilde, expected):
    assert transform(phi, dtilde) == pytest.approx(expected, abs=1e-15)


@settings(max_examples=300, deadline=None)
@given(circle)
def test_fixed_point_is_exact(dtilde):
    assert transform(dtilde, dtilde) == 0.0


def test_identity_at_zero_effective_phase():
    grid = np.linspace(-PI, PI, 100_001)[:-1]
    assert np.max(np.abs(transform(grid, 0.0) - grid)) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(circle)
def test_identity_at_zero_pointwise(phi):
    # one-ulp rounding just below +pi lands on -pi, the same point of the circle
    assert circular_distance(transform(phi, 0.0), phi) <= 1e-12


def test_matches_literal_arccos_form():
    rng = np.random.default_rng(1)
    phi = rng.uniform(-PI, PI, 200_000)
    dtilde = rng.uniform(-PI, PI, 200_000)
    diff = wrap_phase(transform(phi, dtilde) - literal_transform(phi, dtilde))
    assert np.max(np.abs(diff)) < 1e-9


def test_range_closure_on_random_pairs():
    rng = np.random.default_rng(2)
    phi = rng.uniform(-PI, PI, 1_000_000)
    dtilde = rng.uniform(-PI, PI, 1_000_000)
    out = transform(phi, dtilde)
    assert np.all(out >= -PI) and np.all(out < PI)


def test_range_closure_at_branch_edges():
    for d in np.linspace(-PI, PI, 101)[:-1]:
        edges = np.concatenate([breakpoints(d), np.nextafter(breakpoints(d), -10.0)])
        edges = wrap_phase(edges)
        out = transform(edges, d)
        assert np.all(out >= -PI) and np.all(out < PI)


@pytest.mark.parametrize("dtilde", np.linspace(-PI, PI, 50, endpoint=False) + 0.031)
def test_sign_changes_at_breakpoints(dtilde):
    dtilde = wrap_phase(dtilde)
    for b in (dtilde, wrap_phase(dtilde - PI)):
        left = transform(wrap_phase(b - 1e-6), dtilde)
        right = transform(wrap_phase(b + 1e-6), dtilde)
        assert np.sign(left) != np.sign(right)


@settings(max_examples=200, deadline=None)
@given(circle, circle)
def test_sign_is_constant_away_from_breakpoints(phi, dtilde):
    assume(np.min(circular_distance(phi, [dtilde, wrap_phase(dtilde - PI)])) > 1e-9)
    expected = branch_sign(phi, dtilde)
    assert np.sign(transform(phi, dtilde)) in (expected, 0.0)


@pytest.mark.parametrize("dtilde", [-2.9, -PI / 2, -0.4, 0.4, PI / 3, 2.9])
def test_monotone_on_each_branch(dtilde):
    edges = sorted({-PI, PI, 0.0, dtilde, wrap_phase(dtilde - PI)})
    for lo, hi in zip(edges[:-1], edges[1:]):
        pts = np.linspace(lo, hi, 1002)[1:-1]
        assert np.all(np.diff(transform(pts, dtilde)) > 0)


def test_inconsistent_branch_raises(monkeypatch):
    def wrong_branch(phi, dtilde):
        ones = -np.ones(np.broadcast(phi, dtilde).shape)
        return ones, ones, ones

    monkeypatch.setattr(hidden, "_branch_coefficients", wrong_branch)
    with pytest.raises(BranchConsistencyError):
        transform(0.5, PI / 3)


# --- effective phase -------------------------------------------------------


@pytest.mark.parametrize(
    "shape, delta, expected",
    [
        (Shape(1, 1), 0.7, 0.7),
        (Shape(-1, -1), 0.7, -0.7),
        (Shape(1, -1), 0.7, -PI / 2),
        (Shape(1, -1), -2.0, -PI / 2),
        (Shape(-1, 1), 0.7, PI / 2),
        (Shape(-1, -1), -PI, -PI),
    ],
)
def test_effective_phase_examples(shape, delta, expected):
    assert effective_phase(shape, delta) == pytest.approx(expected, abs=1e-15)


def test_shape_validation():
    with pytest.raises(ValueError):
        Shape(0, 1)


# --- measure preservation --------------------------------------------------


@pytest.mark.parametrize("phi, dtilde", [(2.0, PI / 3), (-2.5, -PI / 4)])
def test_pushforward_residual_examples(phi, dtilde):
    assert pushforward_residual(phi, dtilde, 1e-6) < 1e-6


@pytest.mark.parametrize("phi", [-2.7, -1.0, 0.4, 3.0])
@pytest.mark.parametrize("h", [1e-3, 1e-6])
def test_pushforward_residual_identity(phi, h):
    assert pushforward_residual(phi, 0.0, h) < 1e-9


def test_pushforward_residual_refuses_breakpoints():
    with pytest.raises(BoundaryProximityError):
        pushforward_residual(PI / 3 + 5e-6, PI / 3, 1e-6)
    with pytest.raises(BoundaryProximityError):
        pushforward_residual(-PI + 1e-6, 0.5, 1e-6)


@settings(max_examples=300, deadline=None)
@given(circle, circle)
def test_density_is_preserved(phi, dtilde):
    assume(np.min(circular_distance(phi, breakpoints(dtilde))) > 1e-3)
    assert pushforward_residual(phi, dtilde) <= 1e-6


def same_detector_probability(dtilde, n=2_000_000):
    """Brute-force integral of g over the phases whose image keeps its detector."""
    phi = -PI + 2 * PI * (np.arange(n) + 0.5) / n
    same = (phi < 0) == (transform(phi, dtilde) < 0)
    return float(np.sum(density(phi[same])) * 2 * PI / n)


@pytest.mark.parametrize("dtilde", [-PI, -2.0, -PI / 4, 0.0, PI / 3, 2.5])
def test_same_detector_probability_matches_fringe(dtilde):
    # conditional on a simultaneous shape; the 1/2 shape weight turns this into p1
    assert same_detector_probability(dtilde) == pytest.approx(0.5 * (1 + math.cos(dtilde)), abs=1e-5)


@pytest.mark.parametrize("dtilde", [-2.5, PI / 3])
def test_pushforward_distribution_is_restored(dtilde):
    n = 200_000
    phi = sample_phase(np.random.default_rng(5).random(n))
    assert ks_statistic(transform(phi, dtilde)) <= ks_bound(n)


@settings(max_examples=500, deadline=None)
@given(st.floats(-1e6, 1e6))
def test_wrap_phase_is_half_open(x):
    w = wrap_phase(x)
    assert -PI <= w < PI
    assert abs(math.remainder(w - x, 2 * PI)) < 1e-9


@pytest.mark.parametrize("x", [PI, -PI, np.nextafter(-PI, -10), np.nextafter(PI, 10), 3 * PI])
def test_wrap_phase_edge_values(x):
    assert -PI <= wrap_phase(x) < PI
