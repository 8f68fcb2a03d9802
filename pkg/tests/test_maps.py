import math

import numpy as np
import pytest

from hopflab import (LiftInconsistency, MapField, OneFormField, S3MapField,
                     build_s2_grid, calculus, conformality_defect, contact_form,
                     degree_s2, degree_s3, dirichlet_density, hopf_map,
                     lift_identity_check, load_map, pullback_area, save_map,
                     stereographic)
from hopflab import maps as M


def random_rotation(seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
    if np.linalg.det(Q) < 0:
        Q[:, 0] *= -1.0
    return Q


def test_stereographic_values():
    assert np.allclose(stereographic(0j), [0, 0, -1])
    assert np.allclose(stereographic(1 + 0j), [1, 0, 0])
    assert np.allclose(stereographic(complex(np.inf)), [0, 0, 1])
    rng = np.random.default_rng(0)
    z = rng.normal(size=20) + 1j * rng.normal(size=20)
    assert np.abs(np.linalg.norm(stereographic(z), axis=-1) - 1).max() <= 1e-14


def test_hopf_map_values():
    assert np.allclose(hopf_map(np.array([1.0, 0, 0, 0])), [0, 0, 1])
    assert np.allclose(hopf_map(np.array([0, 0, 1.0, 0])), [0, 0, -1])
    s = 1 / math.sqrt(2)
    assert np.allclose(hopf_map(np.array([s, 0, s, 0])), [1, 0, 0])
    rng = np.random.default_rng(1)
    X = rng.normal(size=(50, 4))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    assert np.abs(np.linalg.norm(hopf_map(X), axis=1) - 1).max() <= 1e-13


def test_pullback_of_hopf(g24):
    u = MapField.from_analytic(M.HopfMap(), g24)
    pb = pullback_area(u, g24)
    assert np.abs(pb.c[0] - 4.0).max() <= 1e-8
    assert np.abs(pb.c[1:]).max() <= 1e-8
    # h* omega = 2 d theta pointwise
    dtheta = calculus(g24).d1(contact_form(g24))
    assert np.abs(pb.c - 2.0 * dtheta.c).max() <= 1e-8


def test_pullback_of_constant(g12):
    u = MapField.from_analytic(M.ConstantMap((0, 0, 1.0)), g12)
    assert np.abs(pullback_area(u, g12).c).max() == 0.0
    assert np.abs(dirichlet_density(u, g12)).max() == 0.0
    assert np.abs(conformality_defect(u, g12)).max() == 0.0


def test_area_norm_identity(g16):
    # |u* omega|^2 = (1/4)|du ^ du|^2 = sum_{j<k} |d_j u x d_k u|^2 nodewise
    psi = M.S2AxisStretch((1.5, 0.8, 1.0))
    u = MapField.from_analytic(M.ComposedMap(psi, M.HopfMap()), g16)
    du1, du2, du3 = M.frame_differentials(u, g16)
    oracle = sum(
        np.einsum("ni,ni->n", np.cross(a, b), np.cross(a, b))
        for a, b in ((du1, du2), (du1, du3), (du2, du3))
    )
    lhs = pullback_area(u, g16).norm_pointwise() ** 2
    assert np.abs(lhs - oracle).max() <= 1e-10


def test_dirichlet_density_hopf_and_rotation(g16):
    u = MapField.from_analytic(M.HopfMap(), g16)
    assert np.abs(dirichlet_density(u, g16) - 8.0).max() <= 1e-8
    R = random_rotation(5)
    ur = MapField.from_analytic(M.RotatedMap(M.HopfMap(), R), g16)
    assert np.abs(dirichlet_density(ur, g16) - 8.0).max() <= 1e-8


def test_conformality(g16):
    u = MapField.from_analytic(M.HopfMap(), g16)
    assert np.abs(conformality_defect(u, g16)).max() <= 1e-8
    stretch = MapField.from_analytic(
        M.ComposedMap(M.S2AxisStretch((1.6, 1.0, 1.0)), M.HopfMap()), g16)
    defect = conformality_defect(stretch, g16)
    assert defect.min() >= -1e-10          # the pointwise inequality
    assert defect.max() > 0.1              # strictly non-conformal somewhere


def test_pointwise_inequality_all_test_maps(g16):
    zoo = [
        M.HopfMap(),
        M.RotatedMap(M.HopfMap(), random_rotation(2)),
        M.ComposedMap(M.s2_power(2), M.HopfMap()),
        M.ComposedMap(M.s2_mobius(1.0, 0.25, -0.15, 1.0), M.HopfMap()),
        M.ComposedMap(M.S2AxisStretch((1.3, 0.9, 1.0)), M.HopfMap()),
    ]
    for m in zoo:
        u = MapField.from_analytic(m, g16)
        assert conformality_defect(u, g16).min() >= -1e-10


def test_pullback_naturality(g16):
    # (psi o h)* omega computed directly vs through the two-stage differentials
    psi = M.s2_power(2)
    comp = MapField.from_analytic(M.ComposedMap(psi, M.HopfMap()), g16)
    direct = pullback_area(comp, g16)

    X = g16.ambient()
    t1, t2, t3 = g16.frames()
    h = M.HopfMap()
    Y = h.value(X)
    dus = [psi.push(Y, h.push(X, tau)) for tau in (t1, t2, t3)]
    py = psi.value(Y)
    b1 = np.einsum("ni,ni->n", py, np.cross(dus[2], dus[1]))
    b2 = np.einsum("ni,ni->n", py, np.cross(dus[0], dus[2]))
    b3 = np.einsum("ni,ni->n", py, np.cross(dus[1], dus[0]))
    assert np.abs(direct.c - np.stack([b1, b2, b3])).max() <= 1e-10


def test_degree_s2():
    s2g = build_s2_grid(48, 48)
    cases = [
        (M.S2Identity(), 1),
        (M.S2Conjugate(), -1),
        (M.s2_power(2), 2),
        (M.s2_power(3), 3),
        (M.s2_mobius(1.0, 0.3, -0.2, 1.0), 1),
        (M.S2AxisStretch((1.6, 1.0, 1.0)), 1),
    ]
    for psi, expect in cases:
        d = degree_s2(psi, s2g)
        assert abs(d - expect) <= 1e-6, (expect, d)


def test_degree_s3(g24):
    vid = S3MapField.from_analytic(M.S3Identity(), g24)
    assert abs(degree_s3(vid, g24) - 1.0) <= 1e-8
    R = random_rotation(11)
    vrot = S3MapField.from_analytic(M.S3Rotation(R), g24)
    assert abs(degree_s3(vrot, g24) - 1.0) <= 1e-8
    # join of z -> z^n with the identity has degree n
    for n in (2, 3):
        vj = S3MapField.from_analytic(M.JoinPower(n), g24)
        assert abs(degree_s3(vj, g24) - n) <= 1e-6


def test_lift_identity(g16):
    h = MapField.from_analytic(M.HopfMap(), g16)
    beta = OneFormField(2.0 * contact_form(g16).c)
    uhat = S3MapField.from_analytic(M.S3Identity(), g16)
    assert lift_identity_check(uhat, beta, h, g16) <= 1e-10

    # any circle-action composition is an equally good lift
    uhat2 = S3MapField.from_analytic(M.circle_action(0.9), g16)
    assert lift_identity_check(uhat2, beta, h, g16) <= 1e-10

    with pytest.raises(LiftInconsistency):
        lift_identity_check(uhat, contact_form(g16), h, g16)  # wrong beta
    wrong_u = MapField.from_analytic(M.ConstantMap((0, 0, 1.0)), g16)
    with pytest.raises(LiftInconsistency):
        lift_identity_check(uhat, beta, wrong_u, g16)


def test_map_csv_roundtrip(tmp_path, g12):
    u = MapField.from_analytic(M.HopfMap(), g12)
    path = tmp_path / "map.csv"
    save_map(u, path)
    u2, corr = load_map(path)
    assert corr <= 1e-12
    assert np.abs(u2.values - u.values).max() <= 1e-12

    # off-sphere rows are renormalized and the correction reported
    scaled = MapField(u.values.copy())
    save_map(scaled, path)
    text = path.read_text().replace("1.0", "1.02", 1)
    path.write_text(text)
    _, corr2 = load_map(path)
    assert corr2 > 1e-3
