"""Scalar functionals and the quantitative inequality suite.

The Faddeev-Skyrme energy of a map u: S^3 -> S^2 at coupling rho is

    FS_rho(u) = int |du|^2 + rho^{-2} int |u* omega|^2,

and its relaxation to closed 2-forms alpha with positive Hopf invariant is

    E_rho(alpha) = 2 Q(alpha)^{-1/2} int |alpha| + rho^{-2} Q(alpha)^{-1} int |alpha|^2,

which is invariant under alpha -> c alpha.  The Hopf invariant of a closed
2-form is computed spectrally: on the eigenspace with eigenvalue lam the
potential contributes lam^{-1} ||projection||^2, so

    Q(alpha) = (1/16 pi^2) sum_{k, sign} sign (k+2)^{-1} ||P_k^sign alpha||^2

up to the reported truncation remainder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import GridSpec, GridError, VOL_S3, integrate_scalar
from .forms import (
    OneFormField,
    TwoFormField,
    calculus,
    hodge_star_2to1,
    l2_inner,
    l2_norm,
    wedge_12,
)
from .maps import MapField, dirichlet_density, pullback_area
from .spectral import EigenBasis, SpectralCoeffs, basis_e0, decompose, project_e0

Q_ADMISSIBLE = 1e-6  # floating-point-robust replacement for Q > 0


class EnergeticsError(ValueError):
    pass


class AdmissibilityError(EnergeticsError):
    """The form is outside the admissible class (Hopf invariant not positive)."""


@dataclass
class EnergyReport:
    rho: float
    dirichlet: float
    skyrme: float                 # int |u* omega|^2, unweighted by rho
    total: float                  # dirichlet + rho^{-2} * skyrme
    q_hopf: float | None = None
    truncation: int | None = None
    remainder: float | None = None

    def as_dict(self):
        return {
            "rho": self.rho,
            "dirichlet": self.dirichlet,
            "skyrme": self.skyrme,
            "total": self.total,
            "q_hopf": self.q_hopf,
            "truncation": self.truncation,
            "remainder": self.remainder,
        }


@dataclass
class CoercivityReport:
    rho: float
    epsilon0: float
    samples: int
    min_ratio: float
    violations: int

    def as_dict(self):
        return {
            "rho": self.rho,
            "epsilon0": self.epsilon0,
            "samples": self.samples,
            "min_ratio": self.min_ratio,
            "violations": self.violations,
        }


@dataclass
class InvariantResult:
    q: float
    remainder: float
    coeffs: SpectralCoeffs

    @property
    def remainder_ratio(self):
        return self.remainder / max(self.coeffs.norm, 1e-300)


@dataclass
class GapResult:
    gap: float
    quarter_dist_sq: float
    q: float
    holds: bool


def norm_power_integral(alpha: TwoFormField, q, g: GridSpec) -> float:
    """int |alpha|^q for q in {1, 2} (the auxiliary functionals)."""
    if q not in (1, 2):
        raise EnergeticsError("only the exponents 1 and 2 are used")
    n = alpha.norm_pointwise()
    return integrate_scalar(n if q == 1 else n * n, g)


def check_closed(alpha: TwoFormField, g: GridSpec, tol=1e-6):
    """Reject 2-forms whose collocation exterior derivative is not small."""
    cal = calculus(g)
    d = cal.d2(alpha)
    dnorm = float(np.sqrt(np.dot(d * d, g.weights)))
    scale = max(l2_norm(alpha, g), 1.0)
    if dnorm > tol * scale:
        raise EnergeticsError(f"input 2-form is not closed: ||d alpha|| = {dnorm:.3e}")
    return dnorm


def hopf_invariant_form(alpha: TwoFormField, K, bases, g: GridSpec,
                        closed_tol=1e-6) -> InvariantResult:
    """Spectral Hopf invariant of a closed 2-form, remainder reported."""
    check_closed(alpha, g, closed_tol)
    dec = decompose(alpha, K, bases, g)
    q = 0.0
    for (k, sign), c in dec.coeffs.items():
        q += sign * float(np.dot(c, c)) / (k + 2)
    q /= 16.0 * math.pi**2
    return InvariantResult(q=q, remainder=dec.remainder, coeffs=dec)


def hopf_invariant_map(u: MapField, K, bases, g: GridSpec) -> InvariantResult:
    return hopf_invariant_form(pullback_area(u, g), K, bases, g)


def fs_energy(u: MapField, rho, g: GridSpec, K=None, bases=None) -> EnergyReport:
    """Faddeev-Skyrme energy; the Hopf invariant is attached when bases are given."""
    if rho <= 0:
        raise EnergeticsError(f"coupling must be positive, got rho = {rho}")
    dirichlet = integrate_scalar(dirichlet_density(u, g), g)
    area = pullback_area(u, g)
    skyrme = norm_power_integral(area, 2, g)
    rep = EnergyReport(rho=rho, dirichlet=dirichlet, skyrme=skyrme,
                       total=dirichlet + skyrme / rho**2)
    if bases is not None and K is not None:
        inv = hopf_invariant_form(area, K, bases, g)
        rep.q_hopf, rep.truncation, rep.remainder = inv.q, K, inv.remainder
    return rep


def relaxed_energy(alpha: TwoFormField, rho, K, bases, g: GridSpec,
                   q: float | None = None) -> float:
    """E_rho on admissible closed forms; scale-invariant in alpha.

    ``q`` may be supplied when the Hopf invariant is already known (it is
    recomputed spectrally otherwise).
    """
    if rho <= 0:
        raise EnergeticsError(f"coupling must be positive, got rho = {rho}")
    if q is None:
        q = hopf_invariant_form(alpha, K, bases, g).q
    if q <= Q_ADMISSIBLE:
        raise AdmissibilityError(f"Hopf invariant {q:.3e} is not positive")
    i1 = norm_power_integral(alpha, 1, g)
    i2 = norm_power_integral(alpha, 2, g)
    return 2.0 * i1 / math.sqrt(q) + i2 / (rho**2 * q)


def fs_vs_relaxed(u: MapField, rho, K, bases, g: GridSpec):
    """(FS_rho(u), E_rho(u* omega), slack); the slack is nonnegative."""
    lhs = fs_energy(u, rho, g).total
    rhs = relaxed_energy(pullback_area(u, g), rho, K, bases, g)
    return lhs, rhs, lhs - rhs


def faddeev_gap(alpha: TwoFormField, g: GridSpec, bases, K,
                tol=1e-8) -> GapResult:
    """gap = I_2(alpha) - 32 pi^2 Q(alpha) against one quarter of the squared
    distance to the constant self-dual eigenspace."""
    inv = hopf_invariant_form(alpha, K, bases, g)
    i2 = norm_power_integral(alpha, 2, g)
    gap = i2 - 32.0 * math.pi**2 * inv.q
    proj = project_e0(alpha, g)
    diff = alpha.c - proj.projection.c
    dist_sq = float(np.einsum("in,in,n->", diff, diff, g.weights))
    quarter = 0.25 * dist_sq
    scale = max(i2, 1.0)
    return GapResult(gap=gap, quarter_dist_sq=quarter, q=inv.q,
                     holds=bool(gap >= quarter - tol * scale))


def stability_quadratic_form(psi: OneFormField, rho, g: GridSpec,
                             coclosed_tol=1e-6) -> float:
    """rho^{-2}(||d psi||^2 - 2 int psi^d psi) - (1/2) int psi^d psi.

    On an eigen-potential with eigenvalue lam the value is
    (rho^{-2}(1 - 2/lam) - 1/(2 lam)) ||d psi||^2; the coefficient on the
    lam = 3 mode changes sign at rho = sqrt(2).
    """
    cal = calculus(g)
    dpsi = cal.d1(psi)
    co = cal.codiff1(psi)
    conorm = float(np.sqrt(np.dot(co * co, g.weights)))
    scale = max(l2_norm(dpsi, g), 1e-12)
    if conorm > coclosed_tol * scale:
        raise EnergeticsError(f"potential is not co-closed: ||d* psi|| = {conorm:.3e}")
    dsq = l2_inner(dpsi, dpsi, g)
    cross = integrate_scalar(wedge_12(psi, dpsi), g)
    return (dsq - 2.0 * cross) / rho**2 - 0.5 * cross


def bregman_gap(alpha0: TwoFormField, dphi: TwoFormField, g: GridSpec) -> float:
    """int { |alpha0 + dphi| - |alpha0| - <alpha0/|alpha0|, dphi> }; >= 0.

    The integrand is the Bregman gap of the pointwise norm at alpha0, so it
    needs |alpha0| bounded away from zero (true on the unit-charge constant
    family, where |alpha0| = 4).
    """
    n0 = alpha0.norm_pointwise()
    if n0.min() < 1e-12:
        raise EnergeticsError("base form vanishes somewhere; the gap is undefined")
    n1 = TwoFormField(alpha0.c + dphi.c).norm_pointwise()
    cross = np.einsum("in,in->n", alpha0.c, dphi.c) / n0
    return integrate_scalar(n1 - n0 - cross, g)


def unit_charge_constant(g: GridSpec, coeffs=(4.0, 0.0, 0.0)) -> TwoFormField:
    """sum c_i restrict(omega^+_{0,i}) with sum c_i^2 = 16 (Hopf invariant 1)."""
    c = np.asarray(coeffs, dtype=float)
    if abs(np.dot(c, c) - 16.0) > 1e-9:
        raise EnergeticsError("coefficients must lie on the sphere of radius 4")
    b0 = basis_e0(+1, g)
    # orthonormal members are restrictions scaled by 1/sqrt(vol)
    field = np.einsum("p,pin->in", c * math.sqrt(VOL_S3), b0.fields)
    return TwoFormField(field)


def random_coclosed_potential(bases, K, rng, g: GridSpec, modes=None,
                              target_norm=None):
    """A random exactly-co-closed 1-form built from eigen-potentials.

    Returns (phi, dphi): dphi is the same random combination of the
    orthonormal eigenfields, so d phi = dphi holds by construction.
    ``modes`` restricts the combination to a list of (k, sign) blocks;
    ``target_norm`` rescales ||d phi||_{L^2}.
    """
    if modes is None:
        modes = [(k, s) for k in range(K + 1) for s in (+1, -1)]
    phi = None
    dphi = None
    total_sq = 0.0
    for (k, sign) in modes:
        basis: EigenBasis = bases[(k, sign)]
        c = rng.normal(size=basis.dim)
        total_sq += float(np.dot(c, c))
        lam = basis.eigenvalue
        fld = np.einsum("d,din->in", c, basis.fields)
        pot = fld / lam  # * of the field has identical coefficients
        dphi = fld if dphi is None else dphi + fld
        phi = pot if phi is None else phi + pot
    if target_norm is not None:
        s = target_norm / math.sqrt(total_sq)
        phi, dphi = phi * s, dphi * s
    return OneFormField(phi), TwoFormField(dphi)


@dataclass
class ExpansionFit:
    scales: np.ndarray
    residuals: np.ndarray
    slope: float | None           # None when the residuals sit at roundoff


def expansion_remainder_order(alpha0: TwoFormField, phi: OneFormField, rho, K,
                              bases, g: GridSpec, scales=(1.0, 0.5, 0.25, 0.125)
                              ) -> ExpansionFit:
    """Fit the order of the remainder in the second-order energy expansion.

    Both sides are evaluated honestly: the left side is
    E_rho(alpha0 + s d phi) - E_rho(alpha0); the right side collects the
    quadratic form, the square of the first-order charge variation, and the
    Bregman-gap term.  The leftover should scale like s^3.
    """
    cal = calculus(g)
    dphi = cal.d1(phi)
    e0 = relaxed_energy(alpha0, rho, K, bases, g)
    i_cross = integrate_scalar(wedge_12(phi, dphi), g)
    dsq = l2_inner(dphi, dphi, g)
    pair = l2_inner(alpha0, dphi, g)

    scales = np.asarray(scales, dtype=float)
    resid = np.empty_like(scales)
    for i, s in enumerate(scales):
        alpha = TwoFormField(alpha0.c + s * dphi.c)
        lhs = relaxed_energy(alpha, rho, K, bases, g) - e0
        quad = (s * s * dsq - 2.0 * s * s * i_cross) / rho**2 - 0.5 * s * s * i_cross
        charge_sq = (s * pair) ** 2 / (128.0 * math.pi**2)
        gterm = (2.0 - s * pair / (16.0 * math.pi**2)) * bregman_gap(
            alpha0, TwoFormField(s * dphi.c), g
        )
        resid[i] = lhs - (quad + charge_sq + gterm)

    floor = 1e-12 * max(abs(e0), 1.0)
    if np.all(np.abs(resid) < floor):
        return ExpansionFit(scales, resid, None)
    slope = float(np.polyfit(np.log(scales), np.log(np.abs(resid) + 1e-300), 1)[0])
    return ExpansionFit(scales, resid, slope)


def coercivity_probe(rho, eps0, n_samples, K, bases, g: GridSpec, seed=0,
                     modes=None):
    """Empirical local coercivity of the relaxed energy at the constant family.

    Samples co-closed potentials with ||d phi|| <= eps0, forms
    alpha = alpha^+_{0,1} + d phi rescaled to unit Hopf invariant, recomputes
    the nearest unit-charge constant form, and records the worst ratio
    (E_rho(alpha) - E_rho(nearest)) / ||alpha - nearest||^2.

    Returns (report, ratios).
    """
    if eps0 <= 0:
        raise EnergeticsError("the probe radius must be positive")
    if rho <= 0:
        raise EnergeticsError("the coupling must be positive")
    rng = np.random.default_rng(seed)
    alpha0 = unit_charge_constant(g)
    ratios = np.empty(n_samples)
    for i in range(n_samples):
        amp = eps0 * rng.uniform(0.2, 1.0)
        _, dphi = random_coclosed_potential(bases, K, rng, g, modes=modes,
                                            target_norm=amp)
        alpha = TwoFormField(alpha0.c + dphi.c)
        inv = hopf_invariant_form(alpha, K, bases, g)
        if inv.q <= Q_ADMISSIBLE:
            raise AdmissibilityError("perturbed form left the admissible class")
        alpha = TwoFormField(alpha.c / math.sqrt(inv.q))
        proj = project_e0(alpha, g)
        if not proj.nearest_defined:
            raise EnergeticsError("projection onto the constant family vanished")
        e_alpha = relaxed_energy(alpha, rho, K, bases, g, q=1.0)
        e_near = relaxed_energy(proj.nearest, rho, K, bases, g)
        ratios[i] = (e_alpha - e_near) / proj.distance**2
    report = CoercivityReport(
        rho=rho,
        epsilon0=eps0,
        samples=n_samples,
        min_ratio=float(ratios.min()),
        violations=int(np.sum(ratios <= 0.0)),
    )
    return report, ratios
