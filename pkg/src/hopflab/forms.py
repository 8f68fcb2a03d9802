"""Differential-form fields on the collocation grid.

Forms are stored as coefficients against the orthonormal coframe (e1, e2, e3)
dual to the frame (tau1, tau2, tau3): a 1-form as (a1, a2, a3) with
a = a1 e1 + a2 e2 + a3 e3, a 2-form as (b1, b2, b3) against the basis
(e2^e3, e3^e1, e1^e2).  In this representation the Hodge star is the identity
on coefficients and the L^2 inner product is the quadrature sum of pointwise
Euclidean products.

The frame is not parallel; its structure enters the exterior derivative
through the closed-form terms

    d e1 = 2 e2^e3,   d e2 = 0,   d e3 = 2 cot(2t) e2^e3,

which follow from the commutator [tau2, tau3] = -2 tau1 - 2 cot(2t) tau3
(all other frame commutators vanish).  Collocation differentiation is Fourier
in both angles and barycentric polynomial differentiation across the Gauss
nodes in t.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import GridSpec, GridError, integrate_scalar


@dataclass(eq=False)
class OneFormField:
    """Coefficients (a1, a2, a3) of a 1-form over the grid nodes, shape (3, N)."""

    c: np.ndarray

    def __post_init__(self):
        self.c = np.atleast_2d(np.asarray(self.c, dtype=float))
        if self.c.shape[0] != 3:
            raise GridError("one-form coefficients must have shape (3, N)")
        if not np.all(np.isfinite(self.c)):
            raise GridError("one-form coefficients contain non-finite entries")

    a1 = property(lambda self: self.c[0])
    a2 = property(lambda self: self.c[1])
    a3 = property(lambda self: self.c[2])

    def norm_pointwise(self):
        return np.sqrt(np.einsum("in,in->n", self.c, self.c))


@dataclass(eq=False)
class TwoFormField:
    """Coefficients (b1, b2, b3) of a 2-form against (e2^e3, e3^e1, e1^e2)."""

    c: np.ndarray

    def __post_init__(self):
        self.c = np.atleast_2d(np.asarray(self.c, dtype=float))
        if self.c.shape[0] != 3:
            raise GridError("two-form coefficients must have shape (3, N)")
        if not np.all(np.isfinite(self.c)):
            raise GridError("two-form coefficients contain non-finite entries")

    b1 = property(lambda self: self.c[0])
    b2 = property(lambda self: self.c[1])
    b3 = property(lambda self: self.c[2])

    def norm_pointwise(self):
        return np.sqrt(np.einsum("in,in->n", self.c, self.c))


def _monomial_exponents(k):
    """Exponent tuples of the degree-k monomials in four variables."""
    out = []
    for e1 in range(k, -1, -1):
        for e2 in range(k - e1, -1, -1):
            for e3 in range(k - e1 - e2, -1, -1):
                out.append((e1, e2, e3, k - e1 - e2 - e3))
    return out


def evaluate_monomials(exponents, points):
    """Values of each monomial at each point; shape (n_mono, N)."""
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    vals = np.empty((len(exponents), n))
    for i, (e1, e2, e3, e4) in enumerate(exponents):
        v = np.ones(n)
        for axis, e in enumerate((e1, e2, e3, e4)):
            if e:
                v = v * points[:, axis] ** e
        vals[i] = v
    return vals


@dataclass(eq=False)
class AmbientPolyForm:
    """A 2-form on R^4 with homogeneous degree-k polynomial skew coefficients.

    ``coeff[m]`` is the skew 4x4 matrix multiplying the monomial
    ``exponents[m]``; the form is sum_m sum_{a<b} coeff[m, a, b] x^m dx^a^dx^b.
    """

    degree: int
    coeff: np.ndarray  # (n_mono, 4, 4), skew in the last two axes

    def __post_init__(self):
        self.coeff = np.asarray(self.coeff, dtype=float)
        monos = _monomial_exponents(self.degree)
        if self.coeff.shape != (len(monos), 4, 4):
            raise GridError(
                f"coefficient table shape {self.coeff.shape} does not match "
                f"degree {self.degree}"
            )
        if np.abs(self.coeff + np.swapaxes(self.coeff, 1, 2)).max() > 1e-12:
            raise GridError("coefficient matrices are not skew-symmetric")

    @property
    def exponents(self):
        return _monomial_exponents(self.degree)

    def matrix_at(self, points):
        """Skew coefficient matrices evaluated at points; shape (N, 4, 4)."""
        vals = evaluate_monomials(self.exponents, points)
        return np.einsum("mab,mn->nab", self.coeff, vals)

    @staticmethod
    def constant(matrix):
        m = np.asarray(matrix, dtype=float)
        return AmbientPolyForm(0, m[None, :, :])


@lru_cache(maxsize=8)
def _frame_bivectors(g: GridSpec):
    """W[i, n, a, b] = tau_j^a tau_k^b - tau_j^b tau_k^a for (i,j,k) cyclic."""
    t1, t2, t3 = g.frames()
    pairs = [(t2, t3), (t3, t1), (t1, t2)]
    W = np.empty((3, g.n_nodes, 4, 4))
    for i, (u, v) in enumerate(pairs):
        W[i] = np.einsum("na,nb->nab", u, v) - np.einsum("nb,na->nab", u, v)
    return W


def restrict_two_form(P: AmbientPolyForm, g: GridSpec) -> TwoFormField:
    """Pull an ambient polynomial 2-form back to frame coefficients on the grid."""
    W = _frame_bivectors(g)
    M = P.matrix_at(g.ambient())
    c = 0.5 * np.einsum("nab,inab->in", M, W)
    return TwoFormField(c)


def restrict_batch(degree, coeff_tables, g: GridSpec):
    """Restrict many degree-k ambient forms at once; returns (d, 3, N).

    ``coeff_tables`` has shape (d, n_mono, 4, 4).  Equivalent to stacking
    ``restrict_two_form`` over members but contracts pair-by-pair to keep the
    memory footprint at O(d N).
    """
    coeff_tables = np.asarray(coeff_tables, dtype=float)
    exps = _monomial_exponents(degree)
    vals = evaluate_monomials(exps, g.ambient())  # (m, N)
    W = _frame_bivectors(g)
    out = np.zeros((coeff_tables.shape[0], 3, g.n_nodes))
    for a in range(4):
        for b in range(a + 1, 4):
            pa = coeff_tables[:, :, a, b] @ vals  # (d, N)
            for i in range(3):
                out[:, i, :] += pa * W[i, :, a, b]
    return out


def wedge_11(a: OneFormField, b: OneFormField) -> TwoFormField:
    """Wedge of two 1-forms: the cross-product rule on frame coefficients."""
    if a.c.shape != b.c.shape:
        raise GridError("wedge of one-forms on mismatched grids")
    return TwoFormField(np.cross(a.c, b.c, axis=0))


def wedge_12(a: OneFormField, b: TwoFormField):
    """Coefficient of a^b against the volume form: sum_i a_i b_i nodewise."""
    if a.c.shape != b.c.shape:
        raise GridError("wedge of mismatched fields")
    return np.einsum("in,in->n", a.c, b.c)


def hodge_star_1to2(a: OneFormField) -> TwoFormField:
    """*e1 = e2^e3 etc.; the coefficient arrays carry over unchanged."""
    return TwoFormField(a.c.copy())


def hodge_star_2to1(b: TwoFormField) -> OneFormField:
    return OneFormField(b.c.copy())


def l2_inner(A, B, g: GridSpec) -> float:
    """L^2 inner product of two same-rank form fields."""
    if A.c.shape != B.c.shape:
        raise GridError("inner product of mismatched fields")
    return integrate_scalar(np.einsum("in,in->n", A.c, B.c), g)


def l2_norm(A, g: GridSpec) -> float:
    return float(np.sqrt(max(l2_inner(A, A, g), 0.0)))


def contact_form(g: GridSpec) -> OneFormField:
    """The 1-form dual to the fiber direction tau1 (coefficients (1, 0, 0)).

    This is the restriction of -x2 dx1 + x1 dx2 - x4 dx3 + x3 dx4 and
    satisfies theta ^ d theta = 2 vol.
    """
    c = np.zeros((3, g.n_nodes))
    c[0] = 1.0
    return OneFormField(c)


def _bary_diff_matrix(nodes):
    """Barycentric polynomial differentiation matrix on arbitrary nodes."""
    t = np.asarray(nodes, dtype=float)
    n = len(t)
    cap = (t.max() - t.min()) / 4.0
    w = np.ones(n)
    for i in range(n):
        w[i] = 1.0 / np.prod((t[i] - np.delete(t, i)) / cap)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (w[j] / w[i]) / (t[i] - t[j])
        D[i, i] = -np.sum(D[i, np.arange(n) != i])
    return D


class FrameCalculus:
    """Collocation derivatives along the frame and the exterior derivative.

    Scalar fields are flattened node arrays; internally they are reshaped to
    (n_t, n_ang, n_ang) with axes (t, phi1, phi2).  The angular derivatives
    are Fourier (exact for trigonometric polynomials below the Nyquist
    degree), the t-derivative is polynomial interpolation across the Gauss
    nodes.
    """

    def __init__(self, g: GridSpec):
        self.grid = g
        self.Dt = _bary_diff_matrix(g.t_nodes)
        self.DtT = self.Dt.T.copy()
        k = np.fft.fftfreq(g.n_ang, d=1.0 / g.n_ang)
        if g.n_ang % 2 == 0:
            k = k.copy()
            k[g.n_ang // 2] = 0.0  # drop the Nyquist mode; keeps D real and skew
        self.ik = 1j * k
        t = g.t_nodes
        self.cot_t = (np.cos(t) / np.sin(t))[:, None, None]
        self.tan_t = np.tan(t)[:, None, None]
        self.cot_2t = (np.cos(2 * t) / np.sin(2 * t))[:, None, None]
        self.cot_2t_flat = np.broadcast_to(
            self.cot_2t, g.shape
        ).ravel()

    # -- scalar derivatives ------------------------------------------------

    def _box(self, f):
        return np.asarray(f, dtype=float).reshape(self.grid.shape)

    def dphi(self, f, axis):
        F = np.fft.fft(self._box(f), axis=axis)
        shape = [1, 1, 1]
        shape[axis] = self.grid.n_ang
        F *= self.ik.reshape(shape)
        return np.real(np.fft.ifft(F, axis=axis))

    def dt(self, f):
        return np.tensordot(self.Dt, self._box(f), axes=([1], [0]))

    def dt_adj(self, f):
        return np.tensordot(self.DtT, self._box(f), axes=([1], [0]))

    def tau1(self, f):
        box = self._box(f)
        return (self.dphi(box, 1) + self.dphi(box, 2)).ravel()

    def tau2(self, f):
        return self.dt(f).ravel()

    def tau3(self, f):
        box = self._box(f)
        return (self.cot_t * self.dphi(box, 1) - self.tan_t * self.dphi(box, 2)).ravel()

    # Adjoints with respect to the plain nodal inner product sum_n f_n g_n.
    # Fourier differentiation is skew, and the t-dependent coefficients act
    # on different axes than the angular derivatives, so only tau2 needs the
    # explicit matrix transpose.

    def tau1_adj(self, f):
        return -self.tau1(f)

    def tau2_adj(self, f):
        return self.dt_adj(f).ravel()

    def tau3_adj(self, f):
        return -self.tau3(f)

    # -- exterior derivative -----------------------------------------------

    def d0(self, sigma) -> OneFormField:
        """Exterior derivative of a scalar field."""
        return OneFormField(np.stack([self.tau1(sigma), self.tau2(sigma), self.tau3(sigma)]))

    def d1(self, a: OneFormField) -> TwoFormField:
        """Exterior derivative of a 1-form (includes the frame structure terms)."""
        a1, a2, a3 = a.c
        c1 = self.tau2(a3) - self.tau3(a2) + 2.0 * a1 + 2.0 * self.cot_2t_flat * a3
        c2 = self.tau3(a1) - self.tau1(a3)
        c3 = self.tau1(a2) - self.tau2(a1)
        return TwoFormField(np.stack([c1, c2, c3]))

    def d2(self, b: TwoFormField):
        """Exterior derivative of a 2-form, as the coefficient against vol."""
        b1, b2, b3 = b.c
        return self.tau1(b1) + self.tau2(b2) + self.tau3(b3) + 2.0 * self.cot_2t_flat * b2

    def dstar2(self, b: TwoFormField) -> TwoFormField:
        """d applied to *b; on closed 2-forms this is the eigen-operator."""
        return self.d1(hodge_star_2to1(b))

    def codiff1(self, a: OneFormField):
        """*d* of a 1-form; vanishing marks the co-closed gauge."""
        return self.d2(hodge_star_1to2(a))


@lru_cache(maxsize=8)
def calculus(g: GridSpec) -> FrameCalculus:
    return FrameCalculus(g)


def exterior_derivative_0(sigma, g: GridSpec) -> OneFormField:
    return calculus(g).d0(sigma)


def exterior_derivative_1(a: OneFormField, g: GridSpec) -> TwoFormField:
    return calculus(g).d1(a)


def save_form(field, path):
    """CSV rows (node index, c1, c2, c3) for either form rank."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["hopflab-form", "1"])
        for i in range(field.c.shape[1]):
            wr.writerow([i, repr(float(field.c[0, i])), repr(float(field.c[1, i])), repr(float(field.c[2, i]))])


def load_form(path, rank):
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if header[0] != "hopflab-form":
            raise GridError(f"not a form file: {path}")
        rows = np.array([[float(v) for v in row[1:]] for row in rd])
    cls = OneFormField if rank == 1 else TwoFormField
    return cls(rows.T)
