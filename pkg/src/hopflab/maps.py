"""S^2-valued map fields on the grid: the Hopf map, pullbacks, and degrees.

Analytic maps carry closed-form differentials (value and pushforward of
tangent vectors); nodal maps fall back to collocation derivatives of their
components.  Orientation convention: S^2 is oriented by the frame adapted to
the Hopf fibration (the one in which the Hopf pullback is self-dual, so that
h*omega = 2 d theta holds with a plus sign).  Relative to the outward-normal
convention this reverses the cross product in every area-form evaluation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .geometry import GridSpec, GridError, _gauss_against_density
from .forms import OneFormField, TwoFormField, calculus


class LiftInconsistency(ValueError):
    """The supplied (lift, potential, map) triple fails its defining relations."""


# -- basic maps --------------------------------------------------------------


def stereographic(z):
    """Inverse stereographic projection C u {inf} -> S^2.

    Accepts complex scalars or arrays; infinities map to (0, 0, 1).
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty(z.shape + (3,))
    finite = np.isfinite(z.real) & np.isfinite(z.imag)
    zf = np.where(finite, z, 0.0)
    denom = np.abs(zf) ** 2 + 1.0
    out[..., 0] = 2.0 * zf.real / denom
    out[..., 1] = 2.0 * zf.imag / denom
    out[..., 2] = (np.abs(zf) ** 2 - 1.0) / denom
    out[~finite] = (0.0, 0.0, 1.0)
    return out[0] if scalar else out


def hopf_map(x):
    """The Hopf fibration S^3 -> S^2, x = (Re z, Im z, Re w, Im w) -> (2 z wbar, |z|^2 - |w|^2)."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    X = np.atleast_2d(x)
    x1, x2, x3, x4 = X.T
    out = np.stack(
        [
            2.0 * (x1 * x3 + x2 * x4),
            2.0 * (x2 * x3 - x1 * x4),
            x1 * x1 + x2 * x2 - x3 * x3 - x4 * x4,
        ],
        axis=-1,
    )
    return out[0] if scalar else out


# -- analytic map classes -----------------------------------------------------


class HopfMap:
    """Analytic evaluator for the Hopf map with its exact differential."""

    def value(self, X):
        return hopf_map(X)

    def push(self, X, V):
        x1, x2, x3, x4 = np.asarray(X).T
        v1, v2, v3, v4 = np.asarray(V).T
        return np.stack(
            [
                2.0 * (v1 * x3 + x1 * v3 + v2 * x4 + x2 * v4),
                2.0 * (v2 * x3 + x2 * v3 - v1 * x4 - x1 * v4),
                2.0 * (x1 * v1 + x2 * v2 - x3 * v3 - x4 * v4),
            ],
            axis=-1,
        )


class ConstantMap:
    def __init__(self, y0):
        self.y0 = np.asarray(y0, dtype=float)

    def value(self, X):
        return np.broadcast_to(self.y0, (np.atleast_2d(X).shape[0], 3)).copy()

    def push(self, X, V):
        return np.zeros((np.atleast_2d(X).shape[0], 3))


class RotatedMap:
    """u o R for an S^3 rotation R (precomposition)."""

    def __init__(self, inner, R):
        self.inner = inner
        self.R = np.asarray(R, dtype=float)

    def value(self, X):
        return self.inner.value(X @ self.R.T)

    def push(self, X, V):
        return self.inner.push(X @ self.R.T, V @ self.R.T)


class ComposedMap:
    """psi o u for an S^2 self-map psi (postcomposition)."""

    def __init__(self, psi, inner):
        self.psi = psi
        self.inner = inner

    def value(self, X):
        return self.psi.value(self.inner.value(X))

    def push(self, X, V):
        Y = self.inner.value(X)
        return self.psi.push(Y, self.inner.push(X, V))


class S2Identity:
    def value(self, Y):
        return np.asarray(Y, dtype=float).copy()

    def push(self, Y, W):
        return np.asarray(W, dtype=float).copy()


class S2Conjugate:
    """z -> zbar in the stereographic chart: (y1, y2, y3) -> (y1, -y2, y3)."""

    def value(self, Y):
        out = np.asarray(Y, dtype=float).copy()
        out[:, 1] *= -1.0
        return out

    def push(self, Y, W):
        out = np.asarray(W, dtype=float).copy()
        out[:, 1] *= -1.0
        return out


class S2PowerSquare:
    """z -> z^2 in the stereographic chart, in globally smooth rational form."""

    def value(self, Y):
        y1, y2, y3 = np.asarray(Y, dtype=float).T
        D = 1.0 + y3 * y3
        return np.stack(
            [(y1 * y1 - y2 * y2) / D, 2.0 * y1 * y2 / D, 2.0 * y3 / D], axis=-1
        )

    def push(self, Y, W):
        y1, y2, y3 = np.asarray(Y, dtype=float).T
        w1, w2, w3 = np.asarray(W, dtype=float).T
        D = 1.0 + y3 * y3
        dD = 2.0 * y3 * w3
        return np.stack(
            [
                (2.0 * y1 * w1 - 2.0 * y2 * w2) / D - (y1 * y1 - y2 * y2) * dD / D**2,
                2.0 * (y1 * w2 + y2 * w1) / D - 2.0 * y1 * y2 * dD / D**2,
                2.0 * w3 / D - 2.0 * y3 * dD / D**2,
            ],
            axis=-1,
        )


def _chart(Y):
    """Stereographic chart z = (y1 + i y2) / (1 - y3) and its differential."""
    y1, y2, y3 = np.asarray(Y, dtype=float).T
    return (y1 + 1j * y2) / (1.0 - y3)


def _chart_push(Y, W):
    y1, y2, y3 = np.asarray(Y, dtype=float).T
    w1, w2, w3 = np.asarray(W, dtype=float).T
    return (w1 + 1j * w2) / (1.0 - y3) + (y1 + 1j * y2) * w3 / (1.0 - y3) ** 2


def _unchart(z):
    return stereographic(z)


def _unchart_push(z, dz):
    denom = (np.abs(z) ** 2 + 1.0) ** 2
    re = np.real(np.conj(z) * dz)
    d1 = (2.0 * dz * (np.abs(z) ** 2 + 1.0) - 4.0 * z * re) / denom
    return np.stack([d1.real, d1.imag, 4.0 * re / denom], axis=-1)


class S2ChartMap:
    """An S^2 self-map given by a holomorphic/antiholomorphic chart function.

    Usable away from the chart poles (y3 = 1 and images of chart-function
    poles); every grid this package builds keeps t strictly interior, which
    keeps y3 = -cos 2t strictly inside (-1, 1) for Hopf-composed maps.
    """

    def __init__(self, f, df):
        self.f = f
        self.df = df

    def value(self, Y):
        return _unchart(self.f(_chart(Y)))

    def push(self, Y, W):
        z = _chart(Y)
        return _unchart_push(self.f(z), self.df(z) * _chart_push(Y, W))


def s2_power(n):
    """z -> z^n; degree n."""
    if n == 2:
        return S2PowerSquare()
    return S2ChartMap(lambda z: z**n, lambda z: n * z ** (n - 1))


def s2_mobius(a, b, c, d):
    """z -> (a z + b) / (c z + d); degree 1."""
    det = a * d - b * c
    if abs(det) < 1e-14:
        raise GridError("degenerate coefficients")
    return S2ChartMap(lambda z: (a * z + b) / (c * z + d),
                      lambda z: det / (c * z + d) ** 2)


class S2AxisStretch:
    """Renormalized linear stretch of the ambient target; degree 1, non-conformal."""

    def __init__(self, lams=(1.6, 1.0, 1.0)):
        self.lams = np.asarray(lams, dtype=float)

    def value(self, Y):
        P = np.asarray(Y, dtype=float) * self.lams
        return P / np.linalg.norm(P, axis=-1, keepdims=True)

    def push(self, Y, W):
        P = np.asarray(Y, dtype=float) * self.lams
        dP = np.asarray(W, dtype=float) * self.lams
        n = np.linalg.norm(P, axis=-1, keepdims=True)
        return dP / n - P * np.sum(P * dP, axis=-1, keepdims=True) / n**3


class S3Identity:
    def value(self, X):
        return np.asarray(X, dtype=float).copy()

    def push(self, X, V):
        return np.asarray(V, dtype=float).copy()


class S3Rotation:
    def __init__(self, R):
        self.R = np.asarray(R, dtype=float)

    def value(self, X):
        return X @ self.R.T

    def push(self, X, V):
        return V @ self.R.T


def circle_action(angle):
    """The S^1 action (z, w) -> (e^{i s} z, e^{i s} w) as an S^3 rotation."""
    c, s = math.cos(angle), math.sin(angle)
    R = np.array(
        [[c, -s, 0, 0], [s, c, 0, 0], [0, 0, c, -s], [0, 0, s, c]]
    )
    return S3Rotation(R)


class JoinPower:
    """(z, w) -> (z^n, w) / |(z^n, w)|; a degree-n self-map of S^3."""

    def __init__(self, n):
        self.n = n

    def _poly(self, X):
        z = X[:, 0] + 1j * X[:, 1]
        return np.stack(
            [np.real(z**self.n), np.imag(z**self.n), X[:, 2], X[:, 3]], axis=-1
        )

    def value(self, X):
        P = self._poly(np.asarray(X, dtype=float))
        return P / np.linalg.norm(P, axis=-1, keepdims=True)

    def push(self, X, V):
        X = np.asarray(X, dtype=float)
        V = np.asarray(V, dtype=float)
        z = X[:, 0] + 1j * X[:, 1]
        dzn = self.n * z ** (self.n - 1) * (V[:, 0] + 1j * V[:, 1])
        P = self._poly(X)
        dP = np.stack([dzn.real, dzn.imag, V[:, 2], V[:, 3]], axis=-1)
        nrm = np.linalg.norm(P, axis=-1, keepdims=True)
        return dP / nrm - P * np.sum(P * dP, axis=-1, keepdims=True) / nrm**3


# -- map fields ---------------------------------------------------------------


@dataclass(eq=False)
class MapField:
    """An S^2-valued field over the grid nodes, optionally analytic."""

    values: np.ndarray            # (N, 3), unit rows
    analytic: object = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != 3:
            raise GridError("map values must have shape (N, 3)")
        err = np.abs(np.einsum("ni,ni->n", self.values, self.values) - 1.0).max()
        if err > 1e-10:
            raise GridError(f"map values not on the unit sphere (deviation {err:.2e})")

    @staticmethod
    def from_analytic(m, g: GridSpec):
        return MapField(m.value(g.ambient()), analytic=m)


@dataclass(eq=False)
class S3MapField:
    """An S^3-valued field over the grid nodes, optionally analytic."""

    values: np.ndarray            # (N, 4), unit rows
    analytic: object = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != 4:
            raise GridError("S^3 map values must have shape (N, 4)")
        err = np.abs(np.einsum("ni,ni->n", self.values, self.values) - 1.0).max()
        if err > 1e-10:
            raise GridError(f"map values not on the unit sphere (deviation {err:.2e})")

    @staticmethod
    def from_analytic(m, g: GridSpec):
        return S3MapField(m.value(g.ambient()), analytic=m)


def frame_differentials(u, g: GridSpec):
    """(d_tau1 u, d_tau2 u, d_tau3 u), each (N, dim_target).

    Analytic evaluators are used when present; otherwise the components are
    differentiated by collocation.
    """
    if u.analytic is not None:
        X = g.ambient()
        t1, t2, t3 = g.frames()
        return tuple(u.analytic.push(X, tau) for tau in (t1, t2, t3))
    cal = calculus(g)
    dim = u.values.shape[1]
    out = []
    for op in (cal.tau1, cal.tau2, cal.tau3):
        out.append(np.stack([op(u.values[:, c]) for c in range(dim)], axis=-1))
    return tuple(out)


def pullback_area(u: MapField, g: GridSpec) -> TwoFormField:
    """The pulled-back area form of S^2 in frame coefficients.

    With the fibration-adapted orientation of S^2 the coefficient pattern is
    b_i = u . (d_k u x d_j u) for (i, j, k) cyclic; for the Hopf map this is
    the restriction of 4 (dx1^dx2 + dx3^dx4).
    """
    du1, du2, du3 = frame_differentials(u, g)
    U = u.values
    b1 = np.einsum("ni,ni->n", U, np.cross(du3, du2))
    b2 = np.einsum("ni,ni->n", U, np.cross(du1, du3))
    b3 = np.einsum("ni,ni->n", U, np.cross(du2, du1))
    return TwoFormField(np.stack([b1, b2, b3]))


def dirichlet_density(u: MapField, g: GridSpec):
    """|du|^2 = sum_i |d_tau_i u|^2 nodewise."""
    du1, du2, du3 = frame_differentials(u, g)
    return (
        np.einsum("ni,ni->n", du1, du1)
        + np.einsum("ni,ni->n", du2, du2)
        + np.einsum("ni,ni->n", du3, du3)
    )


def conformality_defect(u: MapField, g: GridSpec):
    """(1/2)|du|^2 - |u*omega| nodewise; zero marks horizontal conformality."""
    return 0.5 * dirichlet_density(u, g) - pullback_area(u, g).norm_pointwise()


# -- degrees ------------------------------------------------------------------


@dataclass(eq=False)
class S2Grid:
    """Quadrature grid on S^2 with an oriented orthonormal frame."""

    nodes: np.ndarray             # (M, 3)
    weights: np.ndarray           # (M,), summing to 4 pi
    e1: np.ndarray                # (M, 3)
    e2: np.ndarray                # (M, 3), (e1, e2) positively oriented


def build_s2_grid(n_t, n_ang) -> S2Grid:
    """Product grid from the (t, phi) parametrization of S^2.

    The latitude rule is Gauss against the density sin t cos t (the area
    element is 2 sin 2t dt dphi), so the total weight is exactly 4 pi.
    """
    if n_t < 2 or n_ang < 4:
        raise GridError("S^2 grid too small")
    t, wt, _ = _gauss_against_density(n_t, lambda s: np.sin(s) * np.cos(s), 0.0, 0.5 * math.pi)
    phi = 2.0 * math.pi * np.arange(n_ang) / n_ang
    T, PHI = np.meshgrid(t, phi, indexing="ij")
    T, PHI = T.ravel(), PHI.ravel()
    W = (wt[:, None] * np.full((1, n_ang), 4.0 * (2.0 * math.pi / n_ang))).ravel()
    s2t, c2t = np.sin(2 * T), np.cos(2 * T)
    nodes = np.stack([s2t * np.cos(PHI), s2t * np.sin(PHI), -c2t], axis=-1)
    e1 = np.stack([c2t * np.cos(PHI), c2t * np.sin(PHI), s2t], axis=-1)
    e2 = np.stack([-np.sin(PHI), np.cos(PHI), np.zeros_like(PHI)], axis=-1)
    return S2Grid(nodes=nodes, weights=W, e1=e1, e2=e2)


def degree_s2(psi, s2g: S2Grid):
    """(1/4 pi) integral of the pulled-back area form; near-integer for genuine maps."""
    Y = s2g.nodes
    p = psi.value(Y)
    d1 = psi.push(Y, s2g.e1)
    d2 = psi.push(Y, s2g.e2)
    integrand = np.einsum("ni,ni->n", p, np.cross(d2, d1))
    return float(np.dot(integrand, s2g.weights)) / (4.0 * math.pi)


def degree_s3(v: S3MapField, g: GridSpec):
    """(1/2 pi^2) integral of the pulled-back volume form of S^3."""
    dv1, dv2, dv3 = frame_differentials(v, g)
    M = np.stack([v.values, dv1, dv2, dv3], axis=1)
    integrand = np.linalg.det(M)
    return float(np.dot(integrand, g.weights)) / (2.0 * math.pi**2)


# -- the lift identity --------------------------------------------------------


def pullback_contact(uhat: S3MapField, g: GridSpec) -> OneFormField:
    """uhat* theta in frame coefficients: theta_y(v) = <v, i y>."""
    dv = frame_differentials(uhat, g)
    Y = uhat.values
    iy = np.stack([-Y[:, 1], Y[:, 0], -Y[:, 3], Y[:, 2]], axis=-1)
    comps = [np.einsum("ni,ni->n", d, iy) for d in dv]
    return OneFormField(np.stack(comps))


def lift_identity_check(uhat: S3MapField, beta: OneFormField, u: MapField,
                        g: GridSpec, consistency_tol=1e-8):
    """Nodewise residual of |d uhat|^2 = (1/4)|beta|^2 + (1/4)|du|^2.

    The triple must satisfy h o uhat = u and beta = 2 uhat* theta; either
    failure raises LiftInconsistency before the identity is evaluated.
    """
    proj = hopf_map(uhat.values)
    err_map = np.abs(proj - u.values).max()
    if err_map > consistency_tol:
        raise LiftInconsistency(f"h o uhat differs from u by {err_map:.3e}")
    beta_expected = 2.0 * pullback_contact(uhat, g).c
    err_beta = np.abs(beta_expected - beta.c).max()
    if err_beta > consistency_tol:
        raise LiftInconsistency(f"beta differs from 2 uhat*theta by {err_beta:.3e}")

    dv1, dv2, dv3 = frame_differentials(uhat, g)
    duhat_sq = sum(np.einsum("ni,ni->n", d, d) for d in (dv1, dv2, dv3))
    beta_sq = np.einsum("in,in->n", beta.c, beta.c)
    du_sq = dirichlet_density(u, g)
    resid = duhat_sq - 0.25 * beta_sq - 0.25 * du_sq
    return float(np.abs(resid).max())


# -- serialization ------------------------------------------------------------


def save_map(u: MapField, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["hopflab-map", "1"])
        for i, row in enumerate(u.values):
            wr.writerow([i, repr(float(row[0])), repr(float(row[1])), repr(float(row[2]))])


def load_map(path):
    """Load a map field; rows are renormalized, the max correction returned."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if header[0] != "hopflab-map":
            raise GridError(f"not a map file: {path}")
        rows = np.array([[float(v) for v in row[1:]] for row in rd])
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms < 1e-8):
        raise GridError("map file contains (near-)zero rows")
    correction = float(np.abs(norms - 1.0).max())
    return MapField(rows / norms[:, None]), correction
