"""Numerical laboratory for the Faddeev-Skyrme energy on the 3-sphere.

Collocation geometry in Hopf coordinates, frame-coefficient differential
forms, the eigenspaces of d* on closed 2-forms, Hopf-invariant and energy
functionals, and projected gradient flow around the Hopf map.
"""

__version__ = "0.1.0"

from .geometry import (AmbientPoint, Frame, GridSpec, GridError, HopfPoint,
                       VOL_S3, build_grid, frame_at, integrate_scalar,
                       load_grid, save_grid, to_ambient)
from .forms import (AmbientPolyForm, OneFormField, TwoFormField, calculus,
                    contact_form, exterior_derivative_0, exterior_derivative_1,
                    hodge_star_1to2, hodge_star_2to1, l2_inner, l2_norm,
                    load_form, restrict_two_form, save_form, wedge_11,
                    wedge_12)
from .spectral import (EigenBasis, SpectralCoeffs, SpectralError, basis_e0,
                       build_bases, build_eigenbasis, decompose,
                       duality_basis, eigen_potential, export_eigenbasis,
                       project_e0, so4_transport, verify_eigen)
from .maps import (LiftInconsistency, MapField, S2Grid, S3MapField,
                   build_s2_grid, conformality_defect, degree_s2, degree_s3,
                   dirichlet_density, hopf_map, lift_identity_check, load_map,
                   pullback_area, save_map, stereographic)
from .energetics import (AdmissibilityError, CoercivityReport, EnergeticsError,
                         EnergyReport, bregman_gap, coercivity_probe,
                         expansion_remainder_order, faddeev_gap, fs_energy,
                         fs_vs_relaxed, hopf_invariant_form,
                         hopf_invariant_map, norm_power_integral,
                         random_coclosed_potential, relaxed_energy,
                         stability_quadratic_form, unit_charge_constant)
from .flow import (FlowConfig, FlowError, FlowTrace, discrete_energy,
                   e1_aligned_start, fs_gradient, gradient_fd_check,
                   perturbed_hopf, run_flow, smooth_gradient, stability_sweep)
