"""Eigenspaces of d* on closed 2-forms over S^3 and their use.

Closed 2-forms on S^3 decompose L^2-orthogonally into eigenspaces of the
operator alpha -> d(*alpha) with eigenvalues +-(k+2), k = 0, 1, 2, ...  The
+(k+2) eigenspace is the restriction to S^3 of the self-dual closed and
co-closed 2-forms on R^4 with homogeneous polynomial coefficients of degree
k; the -(k+2) eigenspace comes from the anti-self-dual ones.  Bases are
constructed exactly on R^4 (null space of the closedness system over the
degree-k monomials), restricted to the grid, and orthonormalized in L^2.

The k = 0 spaces are three-dimensional with constant-coefficient
representatives; the self-dual ones are spanned by

    dx1^dx2 + dx3^dx4,  dx1^dx3 - dx2^dx4,  dx1^dx4 + dx2^dx3

(anti-self-dual: flip the second term's sign).  SO(4) acts transitively on
each constant family by pullback; the quaternion model makes that action an
SO(3) rotation of the three coefficients, which is how ``so4_transport``
produces its rotation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import GridSpec, GridError, VOL_S3
from .forms import (
    AmbientPolyForm,
    OneFormField,
    TwoFormField,
    _monomial_exponents,
    calculus,
    hodge_star_2to1,
    l2_inner,
    l2_norm,
    restrict_batch,
    restrict_two_form,
)


class SpectralError(ValueError):
    """Raised for empty eigenspaces, non-eigen inputs, or bad transport pairs."""


def duality_basis(sign):
    """The three constant (anti-)self-dual form matrices, shape (3, 4, 4)."""
    B = np.zeros((3, 4, 4))
    pairs = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))]
    # second-pair signs: self-dual (+, -, +); anti-self-dual flips them
    seconds = [1.0, -1.0, 1.0]
    for m, ((a, b), (c, d)) in enumerate(pairs):
        s = seconds[m] if sign > 0 else -seconds[m]
        B[m, a, b], B[m, b, a] = 1.0, -1.0
        B[m, c, d], B[m, d, c] = s, -s
    return B


@dataclass(eq=False)
class EigenBasis:
    """An orthonormalized eigenbasis block for one (degree, sign) pair."""

    k: int
    sign: int
    members: list                 # AmbientPolyForm, matched to ``fields``
    fields: np.ndarray            # (dim, 3, N) restricted L^2-orthonormal fields
    grid: GridSpec
    normalized: bool = True

    @property
    def eigenvalue(self):
        return self.sign * (self.k + 2)

    @property
    def dim(self):
        return len(self.members)

    def field(self, i) -> TwoFormField:
        return TwoFormField(self.fields[i])


@dataclass
class SpectralCoeffs:
    """Truncated eigen-expansion of a closed 2-form."""

    truncation: int
    coeffs: dict                  # (k, sign) -> coefficient vector
    remainder: float              # L^2 norm of the unexpanded part
    norm: float                   # L^2 norm of the input

    def mode_energy(self, k, sign):
        c = self.coeffs.get((k, sign))
        return 0.0 if c is None else float(np.dot(c, c))


def _closedness_rows(k, B):
    """Linear system rows enforcing d P = 0 (and the co-closedness guard)."""
    monos = _monomial_exponents(k)
    mono_index = {m: i for i, m in enumerate(monos)}
    lower = _monomial_exponents(k - 1) if k > 0 else []
    lower_index = {m: i for i, m in enumerate(lower)}
    n_unknown = 3 * len(monos)
    if k == 0:
        return np.zeros((0, n_unknown))

    triples = [(i, j, l) for i in range(4) for j in range(i + 1, 4) for l in range(j + 1, 4)]
    triple_index = {t: i for i, t in enumerate(triples)}
    rows = np.zeros((len(lower) * len(triples) + len(lower) * 4, n_unknown))

    def unknown(m, p):
        return 3 * mono_index[m] + p

    # d P = sum_{m,p} c[m,p] sum_a m_a x^{m-e_a} dx^a ^ B_p
    for mi, m in enumerate(monos):
        for a in range(4):
            if m[a] == 0:
                continue
            mu = list(m)
            mu[a] -= 1
            mu = tuple(mu)
            coef = m[a]
            for p in range(3):
                for i in range(4):
                    for j in range(i + 1, 4):
                        if B[p, i, j] == 0.0 or a in (i, j):
                            continue
                        tri = tuple(sorted((a, i, j)))
                        # sign of dx^a ^ dx^i ^ dx^j -> dx^{sorted tri}
                        perm = [a, i, j]
                        sign = 1.0
                        if perm[0] > perm[1]:
                            perm[0], perm[1] = perm[1], perm[0]
                            sign = -sign
                        if perm[1] > perm[2]:
                            perm[1], perm[2] = perm[2], perm[1]
                            sign = -sign
                        if perm[0] > perm[1]:
                            perm[0], perm[1] = perm[1], perm[0]
                            sign = -sign
                        row = lower_index[mu] * len(triples) + triple_index[tri]
                        rows[row, unknown(m, p)] += sign * coef * B[p, i, j]

    # co-closedness guard: sum_a d_a P_{a j} = 0 for each j
    base = len(lower) * len(triples)
    for mi, m in enumerate(monos):
        for a in range(4):
            if m[a] == 0:
                continue
            mu = list(m)
            mu[a] -= 1
            mu = tuple(mu)
            for p in range(3):
                for j in range(4):
                    if B[p, a, j] == 0.0:
                        continue
                    row = base + lower_index[mu] * 4 + j
                    rows[row, unknown(m, p)] += m[a] * B[p, a, j]
    return rows


def _orthonormalize(fields, g: GridSpec, passes=2):
    """Cholesky-based Gram-Schmidt with a re-orthogonalization pass.

    Returns the orthonormal fields and the combined transform M with
    new = M @ old.
    """
    d = fields.shape[0]
    M = np.eye(d)
    F = fields.reshape(d, -1)
    w3 = np.tile(g.weights, 3)
    for _ in range(passes):
        G = (F * w3) @ F.T
        L = np.linalg.cholesky(G)
        Minv = np.linalg.inv(L)
        F = Minv @ F
        M = Minv @ M
    return F.reshape(fields.shape), M


def basis_e0(sign, g: GridSpec) -> EigenBasis:
    """The explicit three-dimensional constant-coefficient eigenbasis."""
    B = duality_basis(sign)
    scale = 1.0 / math.sqrt(VOL_S3)  # the restrictions have pointwise norm 1
    members = [AmbientPolyForm.constant(scale * B[m]) for m in range(3)]
    fields = np.stack([restrict_two_form(P, g).c for P in members])
    return EigenBasis(k=0, sign=+1 if sign > 0 else -1, members=members,
                      fields=fields, grid=g)


def build_eigenbasis(k, sign, g: GridSpec, svd_tol=1e-10) -> EigenBasis:
    """Construct the full eigenbasis block for (k, sign) on the grid."""
    if k < 0:
        raise SpectralError("degree must be nonnegative")
    sign = +1 if sign > 0 else -1
    B = duality_basis(sign)
    monos = _monomial_exponents(k)
    rows = _closedness_rows(k, B)
    if rows.shape[0] == 0:
        null = np.eye(3 * len(monos))
    else:
        _, s, vt = np.linalg.svd(rows)
        rank = int(np.sum(s > svd_tol * s[0])) if s.size else 0
        null = vt[rank:].T
    if null.shape[1] == 0:
        raise SpectralError(f"empty eigenspace for k={k}, sign={sign:+d}; "
                            "the eigenvalue equation is solvable for every degree")

    # assemble skew coefficient tables for each null-space member
    dim = null.shape[1]
    tables = np.zeros((dim, len(monos), 4, 4))
    for d_i in range(dim):
        c = null[:, d_i].reshape(len(monos), 3)
        tables[d_i] = np.einsum("mp,pab->mab", c, B)

    fields = restrict_batch(k, tables, g)
    fields, M = _orthonormalize(fields, g)
    tables = np.einsum("de,emab->dmab", M, tables)
    members = [AmbientPolyForm(k, tables[i]) for i in range(dim)]
    return EigenBasis(k=k, sign=sign, members=members, fields=fields, grid=g)


@dataclass
class EigenVerification:
    max_eigen_residual: float
    max_closedness_residual: float
    degenerate_members: list


def verify_eigen(basis: EigenBasis, g: GridSpec) -> EigenVerification:
    """Recompute the eigen-equation with the collocation operators.

    Independent of the symbolic construction: the restricted fields are
    differentiated on the grid and compared against eigenvalue * field.
    """
    cal = calculus(g)
    lam = basis.eigenvalue
    worst = 0.0
    worst_d = 0.0
    degenerate = []
    for i in range(basis.dim):
        alpha = basis.field(i)
        nrm = l2_norm(alpha, g)
        if nrm < 1e-8:
            degenerate.append(i)
            continue
        resid = cal.dstar2(alpha).c - lam * alpha.c
        worst = max(worst, float(np.sqrt(np.einsum(
            "in,in,n->", resid, resid, g.weights))))
        dres = cal.d2(alpha)
        worst_d = max(worst_d, float(np.sqrt(np.dot(dres * dres, g.weights))))
    return EigenVerification(worst, worst_d, degenerate)


def build_bases(K, g: GridSpec, signs=(+1, -1)):
    """All eigenbasis blocks with k <= K, keyed by (k, sign)."""
    bases = {}
    for k in range(K + 1):
        for sign in signs:
            bases[(k, sign)] = build_eigenbasis(k, sign, g)
    return bases


def decompose(alpha: TwoFormField, K, bases, g: GridSpec) -> SpectralCoeffs:
    """Project onto every eigenbasis block with k <= K.

    The remainder is the honestly assembled L^2 norm of alpha minus its
    projection (not inferred from Parseval).
    """
    flat = alpha.c.reshape(-1)
    w3 = np.tile(g.weights, 3)
    proj = np.zeros_like(flat)
    coeffs = {}
    for k in range(K + 1):
        for sign in (+1, -1):
            basis = bases.get((k, sign))
            if basis is None:
                raise SpectralError(f"missing eigenbasis block ({k}, {sign:+d})")
            F = basis.fields.reshape(basis.dim, -1)
            c = F @ (w3 * flat)
            coeffs[(k, sign)] = c
            proj += c @ F
    rem = flat - proj
    remainder = float(np.sqrt(np.dot(rem * rem, w3)))
    norm = float(np.sqrt(np.dot(flat * flat, w3)))
    return SpectralCoeffs(truncation=K, coeffs=coeffs, remainder=remainder, norm=norm)


def eigen_potential(alpha: TwoFormField, k, sign, g: GridSpec, tol=1e-6) -> OneFormField:
    """The co-closed potential psi = lambda^{-1} * alpha with d psi = alpha.

    Rejects input that is not an eigenfield for the stated (k, sign).
    """
    lam = (+1 if sign > 0 else -1) * (k + 2)
    psi = OneFormField(hodge_star_2to1(alpha).c / lam)
    cal = calculus(g)
    nrm = max(l2_norm(alpha, g), 1e-300)
    resid = cal.d1(psi).c - alpha.c
    rel = float(np.sqrt(np.einsum("in,in,n->", resid, resid, g.weights))) / nrm
    if rel > tol:
        raise SpectralError(
            f"input is not an eigenfield for lambda = {lam} (relative residual {rel:.3e})"
        )
    return psi


# -- SO(4) transport of constant forms -------------------------------------


def _left_mult_matrix(q):
    """Matrix of x -> q x in quaternion coordinates (1, i, j, k)."""
    a, b, c, d = q
    return np.array(
        [
            [a, -b, -c, -d],
            [b, a, -d, c],
            [c, d, a, -b],
            [d, -c, b, a],
        ]
    )


def _right_mult_matrix(q):
    """Matrix of x -> x q."""
    a, b, c, d = q
    return np.array(
        [
            [a, -b, -c, -d],
            [b, a, d, -c],
            [c, -d, a, b],
            [d, c, -b, a],
        ]
    )


def duality_coefficients(A, sign):
    """Coefficients of a constant skew matrix in the duality basis.

    Also returns the residual norm of the opposite-duality part.
    """
    A = np.asarray(A, dtype=float)
    B = duality_basis(sign)
    coef = np.einsum("ab,pab->p", A, B) / 4.0
    resid = A - np.einsum("p,pab->ab", coef, B)
    return coef, float(np.linalg.norm(resid))


def so4_transport(A1, A2, sign, tol=1e-10):
    """A rotation R in SO(4) with R* omega1 = omega2, i.e. R^T A1 R = A2.

    A1, A2 are the skew matrices of two equal-norm constant forms of the same
    duality.  In the quaternion model the congruence action on the duality
    coefficients is the SO(3) rotation of the corresponding unit quaternion,
    so R is the left (self-dual) or right (anti-self-dual) multiplication by
    the quaternion rotating one coefficient vector onto the other.
    """
    sign = +1 if sign > 0 else -1
    a, ra = duality_coefficients(A1, sign)
    b, rb = duality_coefficients(A2, sign)
    if max(ra, rb) > tol * max(np.linalg.norm(a), np.linalg.norm(b), 1e-300):
        raise SpectralError("inputs are not both of the requested duality")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < tol or nb < tol:
        raise SpectralError("transport of a (near-)zero form is undefined")
    if abs(na - nb) > tol * max(na, nb):
        raise SpectralError(f"norm mismatch: |w1| = {na:.12e}, |w2| = {nb:.12e}")

    u, v = a / na, b / nb
    cross = np.cross(u, v)
    dot = float(np.dot(u, v))
    if np.linalg.norm(cross) < 1e-14:
        if dot > 0:
            axis = np.array([1.0, 0.0, 0.0])
            angle = 0.0
        else:
            # antiparallel: rotate by pi about any axis orthogonal to u
            trial = np.array([1.0, 0.0, 0.0])
            if abs(np.dot(trial, u)) > 0.9:
                trial = np.array([0.0, 1.0, 0.0])
            axis = np.cross(u, trial)
            axis /= np.linalg.norm(axis)
            angle = math.pi
    else:
        axis = cross / np.linalg.norm(cross)
        angle = math.atan2(np.linalg.norm(cross), dot)

    half = 0.5 * angle
    q = np.array([math.cos(half), *(math.sin(half) * axis)])
    # The congruence R^T A R rotates the coefficient vector by the inverse
    # quaternion rotation, so build R from the conjugate.
    qc = np.array([q[0], -q[1], -q[2], -q[3]])
    R = _left_mult_matrix(qc) if sign > 0 else _right_mult_matrix(qc)
    scale = max(np.abs(A1).max(), 1e-300)
    if np.abs(R.T @ A1 @ R - A2).max() > 1e-9 * scale:
        R = R.T  # opposite rotation sense for this duality
        if np.abs(R.T @ A1 @ R - A2).max() > 1e-9 * scale:
            raise SpectralError("transport construction failed to verify")
    return R


@dataclass
class E0Projection:
    coefficients: np.ndarray      # against the orthonormalized constant basis
    projection: TwoFormField
    nearest: TwoFormField | None  # nearest unit-charge element, if defined
    distance: float | None
    nearest_defined: bool


def project_e0(alpha: TwoFormField, g: GridSpec, basis: EigenBasis | None = None,
               tol=1e-12) -> E0Projection:
    """Orthogonal projection onto the constant self-dual eigenspace.

    Also returns the nearest element of the unit-charge family (pointwise
    norm 4, i.e. L^2 norm sqrt(32 pi^2)), obtained by radial rescaling of the
    projection; undefined when the projection vanishes.
    """
    if basis is None:
        basis = basis_e0(+1, g)
    F = basis.fields.reshape(basis.dim, -1)
    w3 = np.tile(g.weights, 3)
    flat = alpha.c.reshape(-1)
    c = F @ (w3 * flat)
    proj = TwoFormField((c @ F).reshape(3, -1))
    pnorm = float(np.linalg.norm(c))
    target = math.sqrt(16.0 * VOL_S3)  # L^2 norm of unit-charge constants
    if pnorm < tol:
        return E0Projection(c, proj, None, None, False)
    nearest = TwoFormField(proj.c * (target / pnorm))
    diff = alpha.c - nearest.c
    dist = float(np.sqrt(np.einsum("in,in,n->", diff, diff, g.weights)))
    return E0Projection(c, proj, nearest, dist, True)


def export_eigenbasis(basis: EigenBasis, path):
    """Plain-text member tables: (k, sign, member, exponents, entry, value)."""
    with open(path, "w") as fh:
        fh.write("# hopflab-eigenbasis 1\n")
        fh.write(f"# k={basis.k} sign={basis.sign:+d} dim={basis.dim}\n")
        for idx, P in enumerate(basis.members):
            for m, expo in enumerate(P.exponents):
                for a in range(4):
                    for b in range(a + 1, 4):
                        v = P.coeff[m, a, b]
                        if v != 0.0:
                            fh.write(
                                f"{basis.k} {basis.sign:+d} {idx} "
                                f"{expo[0]} {expo[1]} {expo[2]} {expo[3]} "
                                f"{a} {b} {v!r}\n"
                            )
