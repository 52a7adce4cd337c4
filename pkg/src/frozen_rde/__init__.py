"""Numerical toolkit for the burning-time equations of frozen percolation on the binary tree."""

from .bivariate import (BivariateGridMeasure, apply_F_operator, coarsen, diagonal_measure,
                        from_signature, product_measure, scale_bivariate, signature_of)
from .critical import RootResult, find_c_hat, profile_f_infinity, sweep_c_hat, theta_star
from .dynamics import apply_T2, endogeny_probe, iterate
from .errors import (BelowCritical, DepthTooLarge, EmptyXiWarning, FrozenRDEError, IterationCap,
                     NoBracket, NoSignChange, NotAdmissible, NotScalable, OutOfDomain, TailTooLoose)
from .measures import (AtomicMeasure, make_rho_theta, rde_residual, scale_measure,
                       solve_rde_finite_xi)
from .rtp_sim import (chi, frozen_iteration, sample_bivariate, sample_bivariate_many, sample_root,
                      sample_roots)
from .signature import (Signature, bivariate_rde_residual_f, c_from_signature,
                        check_signature_conditions, compute_signature, f_infinity, f_tilde,
                        gamma_n, psi_map)

__version__ = "0.1.0"
