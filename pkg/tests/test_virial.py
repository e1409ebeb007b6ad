import math

import numpy as np
import pytest

from inls_lab.domain import RadialField, grad_norm, integrate_radial, make_coefficient, make_domain
from inls_lab.errors import DiagnosticError, ParameterError
from inls_lab.evolve import StepControls, evolve
from inls_lab.functionals import energy, make_gn_corpus
from inls_lab.virial import (
    build_cutoff,
    cutoff_profile,
    phi0_decomposition,
    verify_virial,
    virial_terms,
    z_weight,
)


@pytest.fixture(scope="module")
def dv():
    return make_domain(1, 0.5, 20.0, 4096)


@pytest.mark.parametrize("l", [5, 6, 9])
def test_junction_slope_vanishes(l):
    sJ = 1 + (1 / l) ** (1 / (l - 1))
    p = cutoff_profile(np.array([sJ - 1e-9, sJ + 1e-9]), l)
    assert np.all(np.abs(p["dv"]) < 1e-6)
    assert p["v"][0] == pytest.approx(p["v"][1], abs=1e-8)


def test_cutoff_sign_facts(dv):
    w = build_cutoff(5, 4.0, dv)
    r = dv.r
    assert np.all(w.dphi >= 0) and np.all(w.dphi <= 2 * r + 1e-12)
    assert np.all(w.dphi - r * w.d2phi >= -1e-12)
    s = np.linspace(w.r_junction + 1e-6, 2 - 1e-6, 2000)
    assert np.all(cutoff_profile(s, 5)["dv"] < 0)


def test_cutoff_quadratic_inside_constant_outside(dv):
    R = 3.0
    w = build_cutoff(5, R, dv)
    r = dv.r
    inner = r <= R
    assert np.allclose(w.phi[inner], r[inner] ** 2, rtol=1e-14)
    outer = r >= 2 * R
    assert np.ptp(w.phi[outer]) == 0.0 and np.all(w.dphi[outer] == 0)
    assert cutoff_profile(np.array([2.5]), 5)["v"][0] == 0.0


def test_cutoff_continuity_through_third_derivative():
    l = 5
    sJ = 1 + (1 / l) ** (1 / (l - 1))
    for x in (1.0, sJ, 2.0):
        p = cutoff_profile(np.array([x - 1e-9, x + 1e-9]), l)
        for key in ("phi", "v", "dv", "d2v"):
            assert p[key][0] == pytest.approx(p[key][1], abs=1e-5)


@pytest.mark.parametrize("b,l", [(0.5, 4), (1.0, 2), (0.0, 5)])
def test_l_must_exceed_two_over_b(b, l):
    d = make_domain(2, b, 10.0, 256)
    with pytest.raises(ParameterError):
        build_cutoff(l, 2.0, d)


def test_z_weight_inside_support(dv):
    w = build_cutoff(5, 10.0, dv)
    u = RadialField(np.where(dv.r < 8.0, np.exp(-dv.r**2), 0.0), dv)
    assert z_weight(u, w) == pytest.approx(integrate_radial(dv.r**2 * u.abs2, dv), rel=1e-14)
    assert z_weight(RadialField(np.zeros(dv.n), dv), w) == 0.0


def test_z_weight_gaussian(dv):
    # int x^2 e^{-2x^2} dx over R = sqrt(pi/2) / 4
    w = build_cutoff(5, 8.0, dv)
    u = RadialField(np.exp(-dv.r**2), dv)
    assert z_weight(u, w) == pytest.approx(math.sqrt(math.pi / 2) / 4, rel=1e-5)


def test_terms_vanish_inside_support(dv):
    c = make_coefficient("gaussian", dv, a=2.0)
    w = build_cutoff(5, 10.0, dv)
    u = RadialField(np.exp(-dv.r**2) * (1 + 0.5j * dv.r), dv)
    t = virial_terms(u, 0.3, c, w)
    assert max(abs(t.K1), abs(t.K2), abs(t.K3)) < 1e-14
    assert t.e_term == pytest.approx(16 * 0.3)


def test_k4_zero_for_constant_and_nonpositive_for_gaussian(dv):
    w = build_cutoff(5, 2.0, dv)
    const = make_coefficient("constant", dv)
    gauss = make_coefficient("gaussian", dv, a=1.0)
    for f in make_gn_corpus(dv, 30):
        assert virial_terms(f, 0.0, const, w).K4 == 0.0
        t = virial_terms(f, 0.0, gauss, w)
        assert t.K4 <= 0.0
        assert t.K1 <= 0.0


def test_free_flow_virial():
    """Free Gaussian: z'' = 8 ||grad u||^2 = 16 E while the wave stays inside R."""
    d = make_domain(1, 0.5, 40.0, 4096)
    free = make_coefficient("constant", d, k0=0.0)
    w = build_cutoff(5, 15.0, d)
    u0 = RadialField(np.exp(-d.r**2), d)
    e0 = energy(u0, free).total
    assert e0 == pytest.approx(0.5 * grad_norm(u0))
    ctl = StepControls(dt0=1e-3, t_end=1.0, snapshot_times=tuple(np.linspace(0, 1, 11)))
    with pytest.warns(RuntimeWarning, match="k\\(0\\) > 0"):
        _, log, _ = evolve(u0, free, ctl)
    chk = verify_virial(log.snapshots, free, w, e0, detail=True)
    assert chk.max_relative_mismatch < 1e-4
    assert np.allclose(chk.rhs, 16 * e0, rtol=1e-10)


def _virial_mismatch(n, samples, R):
    from inls_lab.groundstate import solve_ground_state

    d = make_domain(1, 0.5, 20.0, n)
    c = make_coefficient("gaussian", d, a=4.0)
    u0 = 0.9 * solve_ground_state(1.0, d).profile
    ctl = StepControls(dt0=1e-3, t_end=1.0, snapshot_times=tuple(np.linspace(0, 1, samples)))
    _, log, _ = evolve(u0, c, ctl)
    return verify_virial(log.snapshots, c, build_cutoff(5, R, d), energy(u0, c).total)


def test_nonlinear_virial_identity():
    assert _virial_mismatch(4096, 41, 4.0) < 1e-2


def test_virial_mismatch_shrinks_under_refinement():
    # a cutoff inside the soliton core is the hardest case
    m = [_virial_mismatch(n, s, 1.5) for n, s in ((2048, 21), (4096, 41), (8192, 81))]
    assert m[0] > m[1] > m[2]


def test_verify_needs_five_uniform_snapshots(dv):
    c = make_coefficient("constant", dv)
    w = build_cutoff(5, 2.0, dv)
    u = RadialField(np.exp(-dv.r**2), dv)
    with pytest.raises(DiagnosticError):
        verify_virial([(t, u) for t in range(4)], c, w, 0.0)
    with pytest.raises(DiagnosticError):
        verify_virial([(t, u) for t in (0, 1, 2, 4, 5)], c, w, 0.0)


def test_phi0_support_and_finiteness(dv):
    c = make_coefficient("flat_top", dv, l0=4.0)
    u = RadialField(np.exp(-(dv.r**2) / 8) * (1 + 0.2j), dv)
    rep = phi0_decomposition(u, c, 4.0, energy(u, c).total, 5)
    assert rep["dphi_outside_max"] == 0.0
    assert rep["Phi0_inside_max"] < 1e-12
    assert rep["finite"] and rep["exterior_bounded"]
    assert rep["identity_residual"] < 1e-12
