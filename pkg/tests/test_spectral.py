import math

import numpy as np
import pytest

from hopflab import (SpectralError, TwoFormField, VOL_S3, basis_e0,
                     build_eigenbasis, calculus, contact_form, decompose,
                     eigen_potential, export_eigenbasis, integrate_scalar,
                     l2_inner, l2_norm, project_e0, so4_transport,
                     unit_charge_constant, verify_eigen, wedge_12)
from hopflab.spectral import duality_basis, _closedness_rows
from conftest import get_bases


def test_basis_e0_dimensions_and_residuals(g20):
    for sign in (+1, -1):
        b = basis_e0(sign, g20)
        assert b.dim == 3
        ver = verify_eigen(b, g20)
        assert ver.max_eigen_residual <= 1e-8
        assert ver.max_closedness_residual <= 1e-8
        F = b.fields.reshape(3, -1)
        w3 = np.tile(g20.weights, 3)
        assert np.abs((F * w3) @ F.T - np.eye(3)).max() <= 1e-10


def test_build_k0_recovers_constant_basis(g16):
    built = build_eigenbasis(0, +1, g16)
    assert built.dim == 3
    explicit = basis_e0(+1, g16)
    # same span: the cross-Gram must be orthogonal
    F1 = built.fields.reshape(3, -1)
    F2 = explicit.fields.reshape(3, -1)
    w3 = np.tile(g16.weights, 3)
    C = (F1 * w3) @ F2.T
    assert np.abs(C @ C.T - np.eye(3)).max() <= 1e-10


def test_eigenbasis_dimensions_by_two_precision_rank(g16):
    # oracle: rank of the constraint system at two floating precisions
    for k, expected in [(1, 8), (2, 15), (3, 24)]:
        for sign in (+1, -1):
            rows = _closedness_rows(k, duality_basis(sign))
            s64 = np.linalg.svd(rows, compute_uv=False)
            s32 = np.linalg.svd(rows.astype(np.float32), compute_uv=False)
            r64 = int(np.sum(s64 > 1e-10 * s64[0]))
            r32 = int(np.sum(s32 > 1e-5 * s32[0]))
            assert r64 == r32
            dim = rows.shape[1] - r64
            b = build_eigenbasis(k, sign, g16)
            assert b.dim == dim == expected


def test_eigen_residuals_through_k3(g20):
    bases = get_bases(g20, 3)
    for (k, s), b in bases.items():
        ver = verify_eigen(b, g20)
        assert ver.max_eigen_residual <= 1e-8, (k, s)
        assert ver.max_closedness_residual <= 1e-8, (k, s)
        assert not ver.degenerate_members


def test_verify_eigen_flags_degenerate_and_perturbed(g16):
    b = build_eigenbasis(1, +1, g16)
    # inject a zero member
    b.fields = np.concatenate([b.fields, np.zeros((1, 3, g16.n_nodes))])
    b.members.append(b.members[0])
    ver = verify_eigen(b, g16)
    assert ver.degenerate_members == [b.dim - 1]
    # perturb a member: the residual must see it
    b2 = build_eigenbasis(1, +1, g16)
    rng = np.random.default_rng(0)
    b2.fields[0] += 1e-3 * rng.normal(size=b2.fields[0].shape)
    ver2 = verify_eigen(b2, g16)
    assert ver2.max_eigen_residual >= 1e-4


def test_cross_block_orthogonality(g16, bases16_k4):
    w3 = np.tile(g16.weights, 3)
    keys = sorted(bases16_k4.keys())
    for i, ka in enumerate(keys):
        Fa = bases16_k4[ka].fields.reshape(bases16_k4[ka].dim, -1)
        assert np.abs((Fa * w3) @ Fa.T - np.eye(bases16_k4[ka].dim)).max() <= 1e-9
        for kb in keys[i + 1:]:
            Fb = bases16_k4[kb].fields.reshape(bases16_k4[kb].dim, -1)
            assert np.abs((Fa * w3) @ Fb.T).max() <= 1e-9


def test_decompose_concentration_and_parseval(g16, bases16_k4, rng):
    alpha = unit_charge_constant(g16)
    dec = decompose(alpha, 2, bases16_k4, g16)
    c0 = dec.coeffs[(0, 1)]
    assert abs(c0[0] - 4 * math.sqrt(VOL_S3)) <= 1e-10
    assert np.abs(c0[1:]).max() <= 1e-10
    assert dec.remainder <= 1e-10
    for key, c in dec.coeffs.items():
        if key != (0, 1):
            assert np.abs(c).max() <= 1e-10

    zero = TwoFormField(np.zeros((3, g16.n_nodes)))
    dz = decompose(zero, 2, bases16_k4, g16)
    assert all(np.abs(c).max() == 0.0 for c in dz.coeffs.values())

    member = bases16_k4[(1, -1)].field(2)
    dm = decompose(member, 2, bases16_k4, g16)
    assert abs(dm.coeffs[(1, -1)][2] - 1.0) <= 1e-10
    assert dm.remainder <= 1e-9

    # Parseval with honestly assembled remainder
    for _ in range(100):
        coeffs = {k: rng.normal(size=b.dim) for k, b in bases16_k4.items()}
        field = sum(np.einsum("d,din->in", c, bases16_k4[k].fields)
                    for k, c in coeffs.items())
        alpha = TwoFormField(field)
        dec = decompose(alpha, 4, bases16_k4, g16)
        total = sum(float(np.dot(c, c)) for c in dec.coeffs.values())
        assert abs(dec.norm**2 - total - dec.remainder**2) <= 1e-9 * max(dec.norm**2, 1)


def test_eigen_potential_hopf_case(g16):
    # alpha = restriction of 4 w+_{0,1} has potential 2 theta
    alpha = unit_charge_constant(g16)
    psi = eigen_potential(alpha, 0, +1, g16)
    assert np.abs(psi.c - 2.0 * contact_form(g16).c).max() <= 1e-12
    cal = calculus(g16)
    dpsi = cal.d1(psi)
    cross = integrate_scalar(wedge_12(psi, dpsi), g16)
    assert abs(cross - 0.5 * l2_inner(dpsi, dpsi, g16)) <= 1e-9


def test_eigen_potential_roundtrip_and_rejection(g16, bases16_k4):
    b = bases16_k4[(1, 1)]
    psi = eigen_potential(b.field(0), 1, +1, g16)
    cal = calculus(g16)
    assert l2_norm(TwoFormField(cal.d1(psi).c - b.fields[0]), g16) <= 1e-8
    conorm = np.abs(cal.codiff1(psi)).max()
    assert conorm <= 1e-8
    with pytest.raises(SpectralError):
        eigen_potential(b.field(0), 2, +1, g16)  # wrong eigenvalue


def test_so4_transport_examples(rng):
    B = duality_basis(+1)
    A1 = np.einsum("p,pab->ab", np.array([1.0, 0, 0]), B)
    R = so4_transport(A1, A1, +1)
    assert np.abs(R.T @ A1 @ R - A1).max() <= 1e-12
    A2 = np.einsum("p,pab->ab", np.array([0, 1.0, 0]), B)
    R = so4_transport(A1, A2, +1)
    assert np.abs(R.T @ A1 @ R - A2).max() <= 1e-10
    assert abs(np.linalg.det(R) - 1.0) <= 1e-12
    for _ in range(100):
        a = rng.normal(size=3)
        b = rng.normal(size=3)
        b *= np.linalg.norm(a) / np.linalg.norm(b)
        M1 = np.einsum("p,pab->ab", a, B)
        M2 = np.einsum("p,pab->ab", b, B)
        R = so4_transport(M1, M2, +1)
        assert np.abs(R.T @ M1 @ R - M2).max() <= 1e-9
        assert np.abs(R @ R.T - np.eye(4)).max() <= 1e-10
        assert abs(np.linalg.det(R) - 1.0) <= 1e-12


def test_so4_transport_rejections():
    B = duality_basis(+1)
    Bm = duality_basis(-1)
    A1 = np.einsum("p,pab->ab", np.array([1.0, 0, 0]), B)
    with pytest.raises(SpectralError):
        so4_transport(A1, 2.0 * A1, +1)  # norm mismatch
    with pytest.raises(SpectralError):
        so4_transport(A1, np.einsum("p,pab->ab", np.array([1.0, 0, 0]), Bm), +1)
    with pytest.raises(SpectralError):
        so4_transport(np.zeros((4, 4)), np.zeros((4, 4)), +1)


def test_project_e0(g16, bases16_k4):
    alpha = unit_charge_constant(g16)
    proj = project_e0(alpha, g16)
    assert proj.nearest_defined
    assert abs(proj.coefficients[0] - 4 * math.sqrt(VOL_S3)) <= 1e-9
    assert proj.distance <= 1e-9

    member = bases16_k4[(1, 1)].field(0)
    p2 = project_e0(member, g16)
    assert not p2.nearest_defined

    mixed = TwoFormField(alpha.c + 0.1 * member.c)
    p3 = project_e0(mixed, g16)
    # Pythagoras oracle: the perpendicular part has norm 0.1
    assert abs(p3.distance - 0.1) <= 1e-9


def test_empty_eigenspace_error():
    with pytest.raises(SpectralError):
        build_eigenbasis(-1, +1, None)


def test_export(tmp_path, g12):
    b = build_eigenbasis(1, +1, g12)
    path = tmp_path / "basis.txt"
    export_eigenbasis(b, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# hopflab-eigenbasis")
    assert len(lines) > b.dim
