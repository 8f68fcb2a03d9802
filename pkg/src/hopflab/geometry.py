"""Hopf-coordinate geometry of the unit 3-sphere.

Points of S^3 are parametrized by t in (0, pi/2) and two angles,

    x = (sin t cos p1, sin t sin p1, cos t cos p2, cos t sin p2),

so that z = x1 + i x2 = e^{i p1} sin t and w = x3 + i x4 = e^{i p2} cos t.
The round metric is dt^2 + sin^2 t dp1^2 + cos^2 t dp2^2, the volume element
sin t cos t dt dp1 dp2, and the total volume 2 pi^2.

The collocation grid is a tensor product of a Gauss rule in t built against
the density sin t cos t (nodes strictly interior, so the coordinate
degeneracies at t = 0, pi/2 are never touched) with uniform periodic nodes in
each angle.  The orthonormal frame

    tau1 = d_p1 + d_p2,   tau2 = d_t,   tau3 = cot t d_p1 - tan t d_p2

(tau1 is the generator of the circle action (z, w) -> (e^{is} z, e^{is} w))
is used everywhere: differential forms are stored as coefficients against the
dual coframe.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

VOL_S3 = 2.0 * math.pi**2


class GridError(ValueError):
    """Invalid grid construction or mismatched field/grid sizes."""


@dataclass(frozen=True)
class HopfPoint:
    """A single point in Hopf coordinates, t strictly interior."""

    t: float
    phi1: float
    phi2: float

    def __post_init__(self):
        if not 0.0 < self.t < 0.5 * math.pi:
            raise GridError(f"t = {self.t} outside the open interval (0, pi/2)")


@dataclass(frozen=True)
class AmbientPoint:
    """A point of S^3 as a unit vector in R^4."""

    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.shape != (4,):
            raise GridError("ambient point must be a length-4 vector")
        if abs(np.dot(x, x) - 1.0) > 1e-12:
            raise GridError("ambient point is not on the unit sphere")
        object.__setattr__(self, "x", x)


@dataclass(frozen=True)
class Frame:
    """Orthonormal tangent frame at a point, as ambient 4-vectors."""

    tau1: np.ndarray
    tau2: np.ndarray
    tau3: np.ndarray


@dataclass(eq=False)
class GridSpec:
    """Tensor collocation grid on S^3 with positive quadrature weights.

    Node layout is C-order over (t, phi1, phi2); flattened arrays have length
    n_t * n_ang * n_ang.  ``weights`` sums to 2 pi^2.
    """

    n_t: int
    n_ang: int
    t_nodes: np.ndarray          # (n_t,)
    t_weights: np.ndarray        # (n_t,) against density sin t cos t
    ang_nodes: np.ndarray        # (n_ang,) uniform on [0, 2 pi)
    weights: np.ndarray          # (N,) flattened volume weights
    t_modal: np.ndarray = None   # (n_t, n_t) node-to-mode transform in t
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def shape(self):
        return (self.n_t, self.n_ang, self.n_ang)

    @property
    def n_nodes(self):
        return self.n_t * self.n_ang * self.n_ang

    def coords(self):
        """Flattened coordinate arrays (T, P1, P2), each of length N."""
        if "coords" not in self._cache:
            T, P1, P2 = np.meshgrid(
                self.t_nodes, self.ang_nodes, self.ang_nodes, indexing="ij"
            )
            self._cache["coords"] = (T.ravel(), P1.ravel(), P2.ravel())
        return self._cache["coords"]

    def ambient(self):
        """All nodes as ambient unit vectors, shape (N, 4)."""
        if "ambient" not in self._cache:
            T, P1, P2 = self.coords()
            st, ct = np.sin(T), np.cos(T)
            self._cache["ambient"] = np.stack(
                [st * np.cos(P1), st * np.sin(P1), ct * np.cos(P2), ct * np.sin(P2)],
                axis=-1,
            )
        return self._cache["ambient"]

    def frames(self):
        """Frame vectors (tau1, tau2, tau3) at all nodes, each (N, 4)."""
        if "frames" not in self._cache:
            T, P1, P2 = self.coords()
            st, ct = np.sin(T), np.cos(T)
            s1, c1 = np.sin(P1), np.cos(P1)
            s2, c2 = np.sin(P2), np.cos(P2)
            tau1 = np.stack([-st * s1, st * c1, -ct * s2, ct * c2], axis=-1)
            tau2 = np.stack([ct * c1, ct * s1, -st * c2, -st * s2], axis=-1)
            tau3 = np.stack([-ct * s1, ct * c1, st * s2, -st * c2], axis=-1)
            self._cache["frames"] = (tau1, tau2, tau3)
        return self._cache["frames"]


def _gauss_against_density(n, density, a, b, n_aux=None):
    """Gauss nodes/weights for int_a^b p(t) density(t) dt, exact for deg(p) <= 2n-1.

    Discretized Stieltjes procedure on a fine auxiliary Gauss-Legendre rule,
    then Golub-Welsch on the resulting Jacobi matrix.
    """
    if n_aux is None:
        n_aux = max(8 * n + 40, 200)
    x, w = np.polynomial.legendre.leggauss(n_aux)
    t = 0.5 * (b - a) * (x + 1.0) + a
    om = 0.5 * (b - a) * w * density(t)

    alpha = np.zeros(n)
    beta = np.zeros(n)  # beta[0] holds the total mass
    p_prev = np.zeros_like(t)
    p_cur = np.ones_like(t)
    norm_prev = 1.0
    norm_cur = np.sum(om)
    beta[0] = norm_cur
    for k in range(n):
        alpha[k] = np.sum(om * t * p_cur**2) / norm_cur
        if k + 1 < n:
            bk = 0.0 if k == 0 else norm_cur / norm_prev
            p_next = (t - alpha[k]) * p_cur - bk * p_prev
            norm_next = np.sum(om * p_next**2)
            beta[k + 1] = norm_next / norm_cur
            p_prev, p_cur = p_cur, p_next
            norm_prev, norm_cur = norm_cur, norm_next

    jac = np.diag(alpha) + np.diag(np.sqrt(beta[1:]), 1) + np.diag(np.sqrt(beta[1:]), -1)
    nodes, vecs = np.linalg.eigh(jac)
    weights = beta[0] * vecs[0, :] ** 2
    order = np.argsort(nodes)
    nodes, weights, vecs = nodes[order], weights[order], vecs[:, order]
    # modal[a, i] = p_a(x_i) sqrt(w_i) for the orthonormal polynomials p_a of
    # the measure; orthogonal, so it doubles as the node-to-mode transform
    modal = vecs * np.sign(vecs[0, :])[None, :]
    return nodes, weights, modal


def build_grid(n_t, n_ang):
    """Collocation grid: Gauss-in-t against sin t cos t, uniform angles.

    Requires n_t >= 2 and n_ang >= 4.
    """
    if n_t < 2 or n_ang < 4:
        raise GridError(f"grid too small: n_t = {n_t} (>= 2), n_ang = {n_ang} (>= 4)")
    t_nodes, t_weights, t_modal = _gauss_against_density(
        n_t, lambda t: np.sin(t) * np.cos(t), 0.0, 0.5 * math.pi
    )
    ang = 2.0 * math.pi * np.arange(n_ang) / n_ang
    ang_w = 2.0 * math.pi / n_ang
    w3 = t_weights[:, None, None] * (ang_w * ang_w) * np.ones((1, n_ang, n_ang))
    return GridSpec(
        n_t=n_t,
        n_ang=n_ang,
        t_nodes=t_nodes,
        t_weights=t_weights,
        ang_nodes=ang,
        weights=w3.ravel(),
        t_modal=t_modal,
    )


def to_ambient(p: HopfPoint) -> AmbientPoint:
    """(t, p1, p2) -> (e^{i p1} sin t, e^{i p2} cos t) as a unit 4-vector."""
    st, ct = math.sin(p.t), math.cos(p.t)
    return AmbientPoint(
        np.array(
            [
                st * math.cos(p.phi1),
                st * math.sin(p.phi1),
                ct * math.cos(p.phi2),
                ct * math.sin(p.phi2),
            ]
        )
    )


def frame_at(p: HopfPoint) -> Frame:
    """Orthonormal frame (tau1, tau2, tau3) at p, pushed to ambient vectors."""
    st, ct = math.sin(p.t), math.cos(p.t)
    s1, c1 = math.sin(p.phi1), math.cos(p.phi1)
    s2, c2 = math.sin(p.phi2), math.cos(p.phi2)
    return Frame(
        tau1=np.array([-st * s1, st * c1, -ct * s2, ct * c2]),
        tau2=np.array([ct * c1, ct * s1, -st * c2, -st * s2]),
        tau3=np.array([-ct * s1, ct * c1, st * s2, -st * c2]),
    )


def integrate_scalar(f, g: GridSpec) -> float:
    """Quadrature sum of a scalar node field against the volume weights."""
    f = np.asarray(f, dtype=float).ravel()
    if f.shape[0] != g.n_nodes:
        raise GridError(f"field length {f.shape[0]} != node count {g.n_nodes}")
    return float(np.dot(f, g.weights))


def t_density_moment(k):
    """Closed form of int_0^{pi/2} t^k sin t cos t dt (quadrature oracle).

    Series from the Taylor expansion of sin 2t; the terms decay factorially,
    so unlike the integration-by-parts recursion this stays well conditioned
    at large k.
    """
    half_pi = 0.5 * math.pi
    total = 0.0
    term_scale = 1.0
    m = 0
    fact = 1.0  # (2m+1)!
    while True:
        term = (-1) ** m * 2.0 ** (2 * m + 1) * half_pi ** (k + 2 * m + 2) / (
            fact * (k + 2 * m + 2)
        )
        total += term
        term_scale = max(term_scale, abs(term))
        if abs(term) < 1e-30 * term_scale and m > 2:
            break
        m += 1
        fact *= (2 * m) * (2 * m + 1)
    return total / 2.0


def save_grid(g: GridSpec, path):
    """CSV export: a version header, (n_t, n_ang), then rows (t, p1, p2, w)."""
    T, P1, P2 = g.coords()
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["hopflab-grid", "1"])
        wr.writerow([g.n_t, g.n_ang])
        for i in range(g.n_nodes):
            wr.writerow([repr(float(T[i])), repr(float(P1[i])), repr(float(P2[i])), repr(float(g.weights[i]))])


def load_grid(path) -> GridSpec:
    """Rebuild a grid from its CSV export (nodes are re-derived, weights read)."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if header[0] != "hopflab-grid":
            raise GridError(f"not a grid file: {path}")
        n_t, n_ang = (int(v) for v in next(rd))
        rows = np.array([[float(v) for v in row] for row in rd])
    g = build_grid(n_t, n_ang)
    if rows.shape[0] != g.n_nodes:
        raise GridError("grid file row count does not match its header")
    if not np.allclose(rows[:, 3], g.weights, rtol=0, atol=1e-12):
        raise GridError("grid file weights disagree with reconstruction")
    return g
