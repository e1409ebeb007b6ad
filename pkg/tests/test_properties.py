"""Randomized invariants."""

import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from inls_lab.domain import (
    RadialField,
    grad_norm,
    integrate_radial,
    make_coefficient,
    make_domain,
    mass_norm,
    sigma_of,
    weighted_norm,
)
from inls_lab.evolve import Stepper
from inls_lab.scenarios import ball_mass, merle_ratio, monotone_ok, ScanRow
from inls_lab.virial import cutoff_profile

DIMS = st.sampled_from([(1, 0.0), (1, 0.3), (1, 0.5), (2, 0.5), (2, 1.0), (3, 0.5), (3, 1.0)])


def smooth_field(d, coef, width):
    r2 = d.r**2
    poly = sum(c * r2**j for j, c in enumerate(coef))
    return RadialField(poly * np.exp(-r2 / width**2), d)


complex_coef = st.lists(
    st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False), min_size=1, max_size=4
).filter(lambda c: abs(c[0]) > 1e-3)


@given(DIMS, complex_coef, st.floats(0.3, 3.0), st.floats(-10, 10))
def test_norms_phase_invariant(nb, coef, width, gamma):
    d = make_domain(nb[0], nb[1], 15.0, 512)
    u = smooth_field(d, coef, width)
    v = u * np.exp(1j * gamma)
    assert math.isclose(mass_norm(v), mass_norm(u), rel_tol=1e-13)
    assert math.isclose(grad_norm(v), grad_norm(u), rel_tol=1e-13)
    assert math.isclose(weighted_norm(v), weighted_norm(u), rel_tol=1e-13)


@given(st.integers(1, 3), st.floats(0.0, 0.99))
def test_sigma_and_conjugate(N, frac):
    b = frac * min(2, N)
    s = sigma_of(N, b)
    assert 2 < s <= 6
    assert math.isclose(1 / s + 1 / (s / (s - 1)), 1.0)
    assert math.isclose((s - 2) * N, 4 - 2 * b)


@given(DIMS, st.floats(0.5, 2.0))
def test_integration_second_order(nb, width):
    N, _ = nb
    exact = None
    errs = []
    for n in (256, 512, 8192):
        d = make_domain(N, 0.0, 12.0 * width, n)
        val = integrate_radial(np.exp(-(d.r / width) ** 2) * (1.0 + d.r), d)
        if n == 8192:
            exact = val
        else:
            errs.append(val)
    e1, e2 = abs(errs[0] - exact), abs(errs[1] - exact)
    # the odd term r makes the rule exactly second order
    assert 3.5 < e1 / e2 < 4.5


@given(DIMS, complex_coef, st.floats(0.5, 2.0), st.floats(-0.5, 0.5))
def test_linear_step_unitary(nb, coef, width, dt):
    d = make_domain(nb[0], nb[1], 20.0, 256)
    st_ = Stepper(d)
    u = smooth_field(d, coef, width).values
    v = st_.linear(u, dt)
    assert math.isclose(st_.mass2(v), st_.mass2(u), rel_tol=1e-12)


@given(complex_coef, st.floats(0.5, 2.0), st.floats(1e-4, 0.05))
def test_strang_reversible(coef, width, dt):
    d = make_domain(1, 0.5, 15.0, 256)
    s = Stepper(d, make_coefficient("gaussian", d))
    u = smooth_field(d, coef, width).values
    back = s.strang(s.strang(u, dt), -dt)
    assert np.max(np.abs(back - u)) < 1e-10 * max(1.0, np.max(np.abs(u)))


@given(st.integers(2, 40))
def test_cutoff_monotone_for_any_l(l):
    sJ = 1 + (1 / l) ** (1 / (l - 1))
    s = np.linspace(0.0, 3.0, 3001)
    p = cutoff_profile(s, l)
    assert np.all(p["v"] >= 0) and np.all(p["v"] <= 2 * s + 1e-12)
    assert np.all(p["v"] - s * p["dv"] >= -1e-10)
    mid = (s > sJ) & (s < 2.0)
    assert np.all(p["dv"][mid] < 0)


@given(arrays(np.float64, 64, elements=st.floats(-2, 2)), st.floats(0.0, 25.0), st.floats(0.0, 25.0))
def test_ball_mass_monotone(vals, r1, r2):
    d = make_domain(2, 0.5, 20.0, 64)
    u = RadialField(vals, d)
    lo, hi = sorted((r1, r2))
    assert 0.0 <= ball_mass(u, lo) <= ball_mass(u, hi) + 1e-12
    assert ball_mass(u, hi) <= mass_norm(u) * (1 + 1e-12)


@given(st.floats(0.1, 0.9), st.floats(0.5, 30.0), st.floats(0.0, 0.95))
def test_merle_ratio_positive_finite(alpha, ell, t):
    r = merle_ratio(1.0, alpha, ell, 0.25, t)
    assert math.isfinite(r) and r > 0


@given(st.lists(st.tuples(st.floats(0.5, 1.5), st.sampled_from(["global", "blowup", "unresolved"])), max_size=8))
def test_monotone_ok_matches_definition(rows):
    sr = [ScanRow("s", m, 0.0, status, None) for m, status in rows]
    blow = [m for m, s in rows if s == "blowup"]
    expected = not (blow and any(s == "global" and m > min(blow) for m, s in rows))
    assert monotone_ok(sr) == expected


@given(st.sampled_from(["gaussian", "flat_top", "cusp", "constant"]), st.floats(0.1, 5.0))
def test_coefficient_rescaling(family, lam):
    d = make_domain(1, 0.5, 10.0, 256)
    c = make_coefficient(family, d)
    cl = c.rescaled(lam)
    assert np.allclose(cl.value(d.r), c.value(d.r / lam), rtol=1e-12, atol=1e-14)
