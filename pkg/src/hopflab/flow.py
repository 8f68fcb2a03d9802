"""Projected gradient descent of the Faddeev-Skyrme energy on nodal maps.

The discrete energy is the quadrature sum of the collocation Dirichlet
density and area-pullback norm; its gradient with respect to the nodal
values is assembled by the chain rule through the fixed differentiation
operators and projected to the tangent planes.  Steps renormalize every node
back to the unit sphere (the exact metric projection for a product of
spheres).  The Hopf invariant is monitored, not enforced: leaving the
configured band is a distinct terminal status.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geometry import GridSpec, integrate_scalar
from .forms import TwoFormField, calculus
from .maps import MapField, HopfMap, frame_differentials
from .energetics import fs_energy
from .spectral import project_e0


class FlowError(RuntimeError):
    pass


@dataclass
class FlowConfig:
    rho: float
    step: float = 1e-3
    max_iter: int = 20000
    grad_tol: float = 1e-5
    q_band: tuple = (0.9, 1.1)
    trunc: int = 2                # truncation for the monitored Hopf invariant
    smooth_degree: int = 5        # polynomial degree of the descent subspace
    check_gradient_every: int = 0  # 0 disables the periodic finite-difference check

    def __post_init__(self):
        if self.step <= 0 or self.grad_tol <= 0:
            raise FlowError("step and grad_tol must be positive")
        if not (self.q_band[0] < 1.0 < self.q_band[1]):
            raise FlowError("the admissible Hopf band must contain 1")


@dataclass
class FlowTrace:
    energy: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    q_estimate: list = field(default_factory=list)
    dist_e01: list = field(default_factory=list)
    gradient_checks: list = field(default_factory=list)  # (iter, rel. error)
    terminal: MapField | None = None
    status: str = "max_iter"
    iterations: int = 0


def _nodal_differentials(values, g: GridSpec):
    cal = calculus(g)
    out = []
    for op in (cal.tau1, cal.tau2, cal.tau3):
        out.append(np.stack([op(values[:, c]) for c in range(3)], axis=-1))
    return out


def _pullback_from_diffs(values, dus):
    du1, du2, du3 = dus
    b1 = np.einsum("ni,ni->n", values, np.cross(du3, du2))
    b2 = np.einsum("ni,ni->n", values, np.cross(du1, du3))
    b3 = np.einsum("ni,ni->n", values, np.cross(du2, du1))
    return np.stack([b1, b2, b3])


def discrete_energy(values, rho, g: GridSpec):
    """Energy of nodal values under the collocation operators (flow's objective)."""
    dus = _nodal_differentials(values, g)
    dirichlet = integrate_scalar(sum(np.einsum("ni,ni->n", d, d) for d in dus), g)
    b = _pullback_from_diffs(values, dus)
    skyrme = integrate_scalar(np.einsum("in,in->n", b, b), g)
    return dirichlet + skyrme / rho**2


class SmoothProjector:
    """W-orthogonal projection onto restrictions of ambient polynomial fields.

    The raw nodal gradient of the collocation energy is exact for the
    discrete functional but carries O(1) aliasing components in
    coordinate-rough directions (which are not smooth fields on the sphere),
    even at smooth critical points.  Pairings of the first variation against
    restrictions of polynomial fields are spectrally accurate, so projecting
    the gradient onto that span recovers a stationarity measure that vanishes
    at the Hopf map to collocation accuracy.  Restrictions of homogeneous
    polynomials of degrees D and D-1 span every polynomial restriction of
    degree <= D and are linearly independent.
    """

    def __init__(self, g: GridSpec, degree=5):
        self.grid = g
        self.degree = degree
        X = g.ambient()
        feats = []
        for d in (degree, degree - 1):
            for expo in _monomial_exponents_4(d):
                v = np.ones(g.n_nodes)
                for axis, e in enumerate(expo):
                    if e:
                        v = v * X[:, axis] ** e
                feats.append(v)
        B = np.stack(feats)
        G = (B * g.weights) @ B.T
        lam, E = np.linalg.eigh(G)
        keep = lam > 1e-12 * lam.max()
        self.Q = (E[:, keep] / np.sqrt(lam[keep])).T @ B   # W-orthonormal rows

    def apply(self, field):
        c = self.Q @ (self.grid.weights * np.asarray(field, dtype=float))
        return c @ self.Q

    def apply_vec(self, field3):
        return np.stack([self.apply(field3[:, c]) for c in range(field3.shape[1])],
                        axis=-1)


def _monomial_exponents_4(k):
    out = []
    for e1 in range(k, -1, -1):
        for e2 in range(k - e1, -1, -1):
            for e3 in range(k - e1 - e2, -1, -1):
                out.append((e1, e2, e3, k - e1 - e2 - e3))
    return out


@lru_cache(maxsize=8)
def smooth_projector(g: GridSpec, degree=5) -> SmoothProjector:
    return SmoothProjector(g, degree)


def fs_gradient(u: MapField, rho, g: GridSpec):
    """Tangent-projected gradient of the discrete energy at the nodal values.

    Exact for the collocation functional: <fs_gradient, v> equals the
    derivative of the discrete energy along any nodal tangent direction v.
    """
    cal = calculus(g)
    values = u.values
    w = g.weights
    dus = _nodal_differentials(values, g)
    adjoints = (cal.tau1_adj, cal.tau2_adj, cal.tau3_adj)

    def adj(i, field3):
        return np.stack([adjoints[i](field3[:, c]) for c in range(3)], axis=-1)

    grad = np.zeros_like(values)
    for d, i in zip(dus, range(3)):
        grad += 2.0 * adj(i, w[:, None] * d)

    b = _pullback_from_diffs(values, dus)
    # b_i = det[u, du_k, du_j] for the cyclic pattern (i,(k,j)) below
    pattern = [(0, 2, 1), (1, 0, 2), (2, 1, 0)]
    coef = 2.0 / rho**2
    for i, ki, ji in pattern:
        wb = (w * b[i])[:, None]
        p, q = dus[ki], dus[ji]
        grad += coef * wb * np.cross(p, q)
        grad += coef * adj(ki, wb * np.cross(q, values))
        grad += coef * adj(ji, wb * np.cross(values, p))

    grad -= values * np.einsum("ni,ni->n", grad, values)[:, None]
    return grad


def effective_degree(g: GridSpec, degree):
    """Cap the descent-subspace degree so quartic products stay unaliased.

    The Skyrme density is quartic in the map, so degree-d directions generate
    angular modes up to 4d, which must stay below the angular resolution.
    """
    return max(2, min(degree, g.n_ang // 4))


def smooth_gradient(u: MapField, rho, g: GridSpec, degree=5):
    """The flow's descent direction: smooth-projected, then tangent-projected.

    Since the projector is W-orthogonal and the raw gradient is tangent, the
    pairing <raw, smooth> equals ||projection||_W^2 >= 0, so this is a
    descent direction; its W-norm is the stationarity measure the flow
    reports (spectrally small at critical points such as the Hopf map).
    """
    grad = fs_gradient(u, rho, g)
    sm = smooth_projector(g, effective_degree(g, degree)).apply_vec(grad)
    sm -= u.values * np.einsum("ni,ni->n", sm, u.values)[:, None]
    return sm


def gradient_fd_check(u: MapField, rho, g: GridSpec, rng, eps=1e-6, central=True,
                      mix=0.0):
    """Relative error of <fs_gradient, v> against a difference quotient.

    v is a random nodal tangent direction; the central quotient removes the
    renormalization-curvature bias of the one-sided one.  ``mix`` blends a
    gradient component into v so the directional derivative stays above the
    double-precision floor of the energy difference.
    """
    grad = fs_gradient(u, rho, g)
    v = rng.normal(size=u.values.shape)
    if mix:
        gn = np.sqrt(np.sum(grad * grad))
        if gn > 0:
            v = (1.0 - mix) * v / np.sqrt(np.sum(v * v)) + mix * grad / gn
    v -= u.values * np.einsum("ni,ni->n", v, u.values)[:, None]
    v /= np.sqrt(np.sum(v * v))

    def energy_at(step):
        pert = u.values + step * v
        pert /= np.linalg.norm(pert, axis=1, keepdims=True)
        return discrete_energy(pert, rho, g)

    if central:
        fd = (energy_at(eps) - energy_at(-eps)) / (2.0 * eps)
    else:
        fd = (energy_at(eps) - discrete_energy(u.values, rho, g)) / eps
    inner = float(np.sum(grad * v))
    return abs(inner - fd) / max(abs(fd), 1e-12)


def _weighted_norm(field3, g: GridSpec):
    return float(np.sqrt(np.einsum("ni,ni,n->", field3, field3, g.weights)))


def run_flow(u0: MapField, cfg: FlowConfig, g: GridSpec, bases=None) -> FlowTrace:
    """Backtracking projected gradient descent.

    The initial trial step for each iteration is the Barzilai-Borwein
    estimate from the previous accepted step (clamped), halved until the
    energy does not increase.  Terminates on the gradient tolerance, the
    iteration cap, or the Hopf estimate leaving the configured band.
    """
    trace = FlowTrace()
    values = u0.values.copy()
    values /= np.linalg.norm(values, axis=1, keepdims=True)
    energy = discrete_energy(values, cfg.rho, g)
    if not math.isfinite(energy):
        raise FlowError(f"non-finite starting energy {energy}")
    step = cfg.step
    prev_values = None
    prev_grad = None
    rng = np.random.default_rng(0)

    for it in range(cfg.max_iter):
        u = MapField(values)
        grad = smooth_gradient(u, cfg.rho, g, degree=cfg.smooth_degree)
        gnorm = _weighted_norm(grad, g)

        q_est = math.nan
        dist = math.nan
        if bases is not None:
            alpha = TwoFormField(_pullback_from_diffs(values, _nodal_differentials(values, g)))
            q_est = 0.0
            from .spectral import decompose  # local import avoids a cycle at module load

            dec = decompose(alpha, cfg.trunc, bases, g)
            for (k, sign), c in dec.coeffs.items():
                q_est += sign * float(np.dot(c, c)) / (k + 2)
            q_est /= 16.0 * math.pi**2
            proj = project_e0(alpha, g)
            diff = alpha.c - proj.projection.c
            dist = float(np.sqrt(np.einsum("in,in,n->", diff, diff, g.weights)))

        trace.energy.append(energy)
        trace.grad_norm.append(gnorm)
        trace.q_estimate.append(q_est)
        trace.dist_e01.append(dist)
        trace.iterations = it + 1

        if cfg.check_gradient_every and it % cfg.check_gradient_every == 0 and it > 0:
            trace.gradient_checks.append((it, gradient_fd_check(u, cfg.rho, g, rng)))

        if gnorm <= cfg.grad_tol:
            trace.status = "converged"
            break
        if bases is not None and not (cfg.q_band[0] <= q_est <= cfg.q_band[1]):
            trace.status = "q_escaped"
            break

        # Barzilai-Borwein trial step from the previous accepted move
        if prev_values is not None:
            dv = values - prev_values
            dg = grad - prev_grad
            denom = float(np.sum(dv * dg))
            if denom > 0:
                step = float(np.sum(dv * dv)) / denom
            else:
                step = step * 2.0
        step = min(max(step, 1e-10), 1e3)

        accepted = False
        s = step
        for _ in range(60):
            trial = values - s * grad
            trial /= np.linalg.norm(trial, axis=1, keepdims=True)
            e_trial = discrete_energy(trial, cfg.rho, g)
            if not math.isfinite(e_trial):
                raise FlowError(f"non-finite energy at iteration {it}, step {s}")
            if e_trial <= energy:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            trace.status = "converged" if gnorm <= 10 * cfg.grad_tol else "stalled"
            break

        prev_values, prev_grad = values, grad
        values, energy, step = trial, e_trial, s

    trace.terminal = MapField(values)
    return trace


# -- perturbed starts ---------------------------------------------------------


def random_tangent_field(g: GridSpec, base: MapField, seed, degree=2):
    """A smooth random tangent field along a map, from low-degree ambient polynomials."""
    rng = np.random.default_rng(seed)
    X = g.ambient()
    feats = [np.ones(g.n_nodes)]
    feats += [X[:, a] for a in range(4)]
    if degree >= 2:
        feats += [X[:, a] * X[:, b] for a in range(4) for b in range(a, 4)]
    F = np.stack(feats, axis=-1)
    v = F @ rng.normal(size=(F.shape[1], 3))
    v -= base.values * np.einsum("ni,ni->n", v, base.values)[:, None]
    v /= np.abs(v).max()
    return v


def perturbed_hopf(g: GridSpec, amplitude, seed):
    """normalize(h + amplitude * random tangent field); a nodal map."""
    h = MapField.from_analytic(HopfMap(), g)
    v = random_tangent_field(g, h, seed)
    values = h.values + amplitude * v
    values /= np.linalg.norm(values, axis=1, keepdims=True)
    return MapField(values)


def mode_aligned_perturbation(g: GridSpec, target: TwoFormField, seed=0,
                              fd_step=1e-5):
    """Tangent field whose first-order pullback variation fits a target 2-form.

    Least-squares fit over a family of polynomial tangent fields; the fit
    residual (relative) is returned with the field.  This is the map-level
    seeding heuristic for the instability experiments.
    """
    h = MapField.from_analytic(HopfMap(), g)
    X = g.ambient()
    feats = [X[:, a] for a in range(4)]
    feats += [X[:, a] * X[:, b] for a in range(4) for b in range(a, 4)]
    basis_fields = []
    for f in feats:
        for c in range(3):
            v = np.zeros((g.n_nodes, 3))
            v[:, c] = f
            v -= h.values * np.einsum("ni,ni->n", v, h.values)[:, None]
            basis_fields.append(v)

    w3 = np.sqrt(np.tile(g.weights, 3))

    def variation(v):
        plus = h.values + fd_step * v
        plus /= np.linalg.norm(plus, axis=1, keepdims=True)
        minus = h.values - fd_step * v
        minus /= np.linalg.norm(minus, axis=1, keepdims=True)
        bp = _pullback_from_diffs(plus, _nodal_differentials(plus, g))
        bm = _pullback_from_diffs(minus, _nodal_differentials(minus, g))
        return (bp - bm).reshape(-1) / (2.0 * fd_step)

    A = np.stack([variation(v) * w3 for v in basis_fields], axis=-1)
    b = target.c.reshape(-1) * w3
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = float(np.linalg.norm(A @ coef - b) / max(np.linalg.norm(b), 1e-300))
    v = sum(c * vb for c, vb in zip(coef, basis_fields))
    v /= np.abs(v).max()
    return v, resid


def e1_aligned_start(g: GridSpec, bases, amplitude=0.05, seed=0):
    """Perturbed Hopf start aligned with the best-aligned E_1^+ eigenfield."""
    from .energetics import unit_charge_constant

    basis = bases[(1, 1)]
    a01 = unit_charge_constant(g)
    al = np.einsum("in,din->dn", a01.c / 4.0, basis.fields)
    M = (al * g.weights) @ al.T
    _, vec = np.linalg.eigh(M)
    target = TwoFormField(np.einsum("d,din->in", vec[:, -1], basis.fields))
    v, resid = mode_aligned_perturbation(g, target, seed=seed)
    h = MapField.from_analytic(HopfMap(), g)
    values = h.values + amplitude * v
    values /= np.linalg.norm(values, axis=1, keepdims=True)
    return MapField(values), resid


@dataclass
class SweepRow:
    rho: float
    status: str
    fs_hopf: float
    terminal_energy: float
    min_energy: float
    descended: bool
    first_below: int | None
    q_terminal: float
    dist_e01_terminal: float

    def as_dict(self):
        return {
            "rho": self.rho,
            "status": self.status,
            "fs_hopf": self.fs_hopf,
            "terminal_energy": self.terminal_energy,
            "min_energy": self.min_energy,
            "descended": self.descended,
            "first_below": self.first_below,
            "q_terminal": self.q_terminal,
            "dist_e01_terminal": self.dist_e01_terminal,
        }


def stability_sweep(rhos, cfg_template: FlowConfig, g: GridSpec, bases,
                    perturbation="random", amplitude=0.05, seed=0,
                    descent_tol=1e-8):
    """Flows from identically seeded perturbed starts across couplings.

    Records, per rho, whether the trace ever fell below the discrete Hopf-map
    energy by more than ``descent_tol`` relative.
    """
    rows = []
    h = MapField.from_analytic(HopfMap(), g)
    for rho in rhos:
        cfg = FlowConfig(rho=rho, step=cfg_template.step,
                         max_iter=cfg_template.max_iter,
                         grad_tol=cfg_template.grad_tol,
                         q_band=cfg_template.q_band,
                         trunc=cfg_template.trunc)
        if perturbation == "e1plus":
            u0, _ = e1_aligned_start(g, bases, amplitude=amplitude, seed=seed)
        else:
            u0 = perturbed_hopf(g, amplitude, seed)
        fs_h = discrete_energy(h.values, rho, g)
        trace = run_flow(u0, cfg, g, bases)
        energies = np.array(trace.energy)
        below = np.nonzero(energies < fs_h * (1.0 - descent_tol))[0]
        rows.append(
            SweepRow(
                rho=rho,
                status=trace.status,
                fs_hopf=fs_h,
                terminal_energy=float(energies[-1]),
                min_energy=float(energies.min()),
                descended=bool(below.size),
                first_below=int(below[0]) if below.size else None,
                q_terminal=float(trace.q_estimate[-1]),
                dist_e01_terminal=float(trace.dist_e01[-1]),
            )
        )
    return rows
