import math

import numpy as np
import pytest

from hopflab import (AmbientPolyForm, GridError, OneFormField, TwoFormField,
                     VOL_S3, calculus, contact_form, hodge_star_1to2,
                     hodge_star_2to1, integrate_scalar, l2_inner, l2_norm,
                     load_form, restrict_two_form, save_form, wedge_11,
                     wedge_12)
from hopflab.geometry import HopfPoint, frame_at, to_ambient
from hopflab.spectral import duality_basis, basis_e0, eigen_potential
from hopflab.maps import HopfMap, MapField, pullback_area


def selfdual_form(m=0):
    return AmbientPolyForm.constant(duality_basis(+1)[m])


def antiselfdual_form(m=0):
    return AmbientPolyForm.constant(duality_basis(-1)[m])


def smooth_oneform(g, rng, degree=2):
    """Restriction of an ambient 1-form with random polynomial coefficients."""
    X = g.ambient()
    t1, t2, t3 = g.frames()
    const = rng.normal(size=4)
    lin = rng.normal(size=(4, 4))
    quad = rng.normal(size=(4, 4, 4)) if degree >= 2 else np.zeros((4, 4, 4))
    comp = []
    for tau in (t1, t2, t3):
        f = np.zeros(g.n_nodes)
        for a in range(4):
            fa = const[a] + X @ lin[a] + np.einsum("bc,nb,nc->n", quad[a], X, X)
            f += fa * tau[:, a]
        comp.append(f)
    return OneFormField(np.stack(comp))


# -- restriction --------------------------------------------------------------


def test_restrict_selfdual_constant(g16):
    r = restrict_two_form(selfdual_form(0), g16)
    assert np.abs(r.c[0] - 1.0).max() <= 1e-14
    assert np.abs(r.c[1:]).max() <= 1e-14
    assert np.abs(r.norm_pointwise() - 1.0).max() <= 1e-14


def test_restrict_zero(g12):
    r = restrict_two_form(AmbientPolyForm.constant(np.zeros((4, 4))), g12)
    assert np.abs(r.c).max() == 0.0


def test_restrict_antiselfdual_hand_values(g16):
    # oracle: direct frame evaluation gives (cos 2t, 0, -sin 2t)
    r = restrict_two_form(antiselfdual_form(0), g16)
    T, _, _ = g16.coords()
    assert np.abs(r.c[0] - np.cos(2 * T)).max() <= 1e-13
    assert np.abs(r.c[1]).max() <= 1e-13
    assert np.abs(r.c[2] + np.sin(2 * T)).max() <= 1e-13
    assert np.abs(r.norm_pointwise() - 1.0).max() <= 1e-13
    # ten hand-computed points, evaluated independently of the grid machinery
    rng = np.random.default_rng(3)
    M = duality_basis(-1)[0]
    for _ in range(10):
        p = HopfPoint(rng.uniform(0.1, 1.4), rng.uniform(0, 6.28), rng.uniform(0, 6.28))
        fr = frame_at(p)
        b1 = fr.tau2 @ M @ fr.tau3
        assert abs(b1 - math.cos(2 * p.t)) <= 1e-13


def test_ambient_poly_form_rejects_non_skew():
    bad = np.zeros((4, 4))
    bad[0, 1] = 1.0
    with pytest.raises(GridError):
        AmbientPolyForm.constant(bad)


# -- wedge products -----------------------------------------------------------


def test_wedge_self_vanishes(g12, rng):
    a = smooth_oneform(g12, rng)
    assert np.abs(wedge_11(a, a).c).max() <= 1e-13


def test_wedge_basis_case(g12):
    n = g12.n_nodes
    e1 = OneFormField(np.stack([np.ones(n), np.zeros(n), np.zeros(n)]))
    e2 = OneFormField(np.stack([np.zeros(n), np.ones(n), np.zeros(n)]))
    w = wedge_11(e1, e2)
    assert np.abs(w.c[2] - 1.0).max() == 0.0
    assert np.abs(w.c[:2]).max() == 0.0


def test_wedge_determinant_oracle(g12, rng):
    a, b, c = (smooth_oneform(g12, rng) for _ in range(3))
    triple = wedge_12(c, wedge_11(a, b))
    M = np.stack([c.c.T, a.c.T, b.c.T], axis=1)
    assert np.abs(triple - np.linalg.det(M)).max() <= 1e-11


def test_wedge_12_cases(g12, rng):
    a = smooth_oneform(g12, rng)
    zero = TwoFormField(np.zeros_like(a.c))
    assert np.abs(wedge_12(a, zero)).max() == 0.0
    n = g12.n_nodes
    e1 = OneFormField(np.stack([np.ones(n), np.zeros(n), np.zeros(n)]))
    e23 = TwoFormField(np.stack([np.ones(n), np.zeros(n), np.zeros(n)]))
    assert np.abs(wedge_12(e1, e23) - 1.0).max() == 0.0


def test_mismatched_grids_rejected(g12, g16, rng):
    a = smooth_oneform(g12, rng)
    b = smooth_oneform(g16, rng)
    with pytest.raises(GridError):
        wedge_11(a, b)
    with pytest.raises(GridError):
        l2_inner(a, b, g12)


# -- Hodge star ---------------------------------------------------------------


def test_star_involution_and_isometry(g12, rng):
    a = smooth_oneform(g12, rng)
    assert np.abs(hodge_star_2to1(hodge_star_1to2(a)).c - a.c).max() == 0.0
    sa = hodge_star_1to2(a)
    assert abs(l2_inner(a, a, g12) - l2_inner(sa, sa, g12)) <= 1e-12
    n = g12.n_nodes
    e1 = OneFormField(np.stack([np.ones(n), np.zeros(n), np.zeros(n)]))
    assert np.abs(hodge_star_1to2(e1).c[0] - 1.0).max() == 0.0


# -- exterior derivative --------------------------------------------------------


def test_d_after_d_scalar(g24):
    X = g24.ambient()
    cal = calculus(g24)
    sigma = (X[:, 0] * X[:, 2] + X[:, 1] ** 2 * X[:, 3]
             - 0.7 * X[:, 3] * X[:, 0] ** 2)
    dds = cal.d1(cal.d0(sigma))
    assert np.abs(dds.c).max() <= 1e-8


def test_dtheta_is_selfdual_restriction(g16):
    cal = calculus(g16)
    dtheta = cal.d1(contact_form(g16))
    target = restrict_two_form(selfdual_form(0), g16)
    assert np.abs(dtheta.c - 2.0 * target.c).max() <= 1e-10


def test_closed_ambient_oneform(g24):
    cal = calculus(g24)
    t1, t2, t3 = g24.frames()
    dx1 = OneFormField(np.stack([t1[:, 0], t2[:, 0], t3[:, 0]]))
    assert np.abs(cal.d1(dx1).c).max() <= 1e-9


def test_integration_by_parts(g24, rng):
    cal = calculus(g24)
    a = smooth_oneform(g24, rng)
    b = smooth_oneform(g24, rng)
    lhs = integrate_scalar(wedge_12(a, cal.d1(b)), g24)
    rhs = integrate_scalar(wedge_12(b, cal.d1(a)), g24)
    assert abs(lhs - rhs) <= 1e-8


def test_coclosed_poincare_bound(g16, bases16_k4, rng):
    # for combinations of eigen-potentials, int psi ^ d psi = sum lam^-1 ||.||^2,
    # so |int psi ^ d psi| <= (1/2) ||d psi||^2 holds literally
    from hopflab import random_coclosed_potential
    cal = calculus(g16)
    for _ in range(20):
        psi, dpsi = random_coclosed_potential(bases16_k4, 4, rng, g16)
        cross = integrate_scalar(wedge_12(psi, cal.d1(psi)), g16)
        assert abs(cross) <= 0.5 * l2_inner(dpsi, dpsi, g16) + 1e-9


# -- theta --------------------------------------------------------------------


def test_theta_field(g16):
    theta = contact_form(g16)
    assert np.abs(theta.c[0] - 1.0).max() == 0.0
    assert np.abs(theta.c[1:]).max() == 0.0
    assert np.abs(theta.norm_pointwise() - 1.0).max() == 0.0
    cal = calculus(g16)
    integrand = wedge_12(theta, cal.d1(theta))
    assert np.abs(integrand - 2.0).max() <= 1e-10
    assert abs(integrate_scalar(integrand, g16) - 2 * VOL_S3) <= 1e-10


# -- L2 inner products ----------------------------------------------------------


def test_l2_values(g16):
    r = restrict_two_form(selfdual_form(0), g16)
    r4 = TwoFormField(4.0 * r.c)
    assert abs(l2_inner(r4, r4, g16) - 32 * math.pi**2) <= 1e-9
    zero = TwoFormField(np.zeros_like(r.c))
    assert l2_inner(r, zero, g16) == 0.0
    anti = restrict_two_form(antiselfdual_form(0), g16)
    assert abs(l2_inner(r, anti, g16)) <= 1e-10


def test_analytic_vs_collocation_derivative(g24):
    # the analytic pullback of the Hopf map against the collocation route
    h_analytic = MapField.from_analytic(HopfMap(), g24)
    h_nodal = MapField(h_analytic.values.copy())
    pa = pullback_area(h_analytic, g24)
    pn = pullback_area(h_nodal, g24)
    assert np.abs(pa.c - pn.c).max() <= 1e-8


def test_form_csv_roundtrip(tmp_path, g12, rng):
    a = smooth_oneform(g12, rng)
    path = tmp_path / "form.csv"
    save_form(a, path)
    b = load_form(path, rank=1)
    assert np.abs(a.c - b.c).max() == 0.0
