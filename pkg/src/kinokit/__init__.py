"""Numerical toolkit for kinetic-equation regularity machinery.

Measures the ellipticity, cancellation, cone and coercivity constants of
a nonlocal collision kernel built from analytic velocity profiles, in
the kinetic (shear-invariant) geometry, with every constant swept over
the velocity-frame change that the large-velocity theory relies on.
"""

from ._results import CheckResult
from .collision_kernel import (
    CutoffSpec,
    KernelEval,
    apply_L,
    bump_tail,
    cancel1,
    cancel2,
    conv_gamma,
    conv_gamma_closed,
    cov_pv_discrepancy,
    direction_profile,
    kernel_cov_eval,
    kernel_eval,
    tail_mass,
    transformed_direction_profile,
)
from .ellipticity_verifier import (
    SweepGrid,
    check_A0,
    check_bilinear_bounds,
    check_bounded,
    check_cancel_conv,
    check_cancellation,
    check_classK,
    check_cone,
    check_cov_pv,
    check_da_equivalence,
    check_gs_coercivity,
    check_measure_condition,
    check_nondeg1,
    check_tail_decay,
    transformed_suite,
)
from .harness_cli import (
    Report,
    Scenario,
    ScenarioError,
    emit,
    load_scenario,
    main,
    reference_scenario,
    run,
)
from .kinetic_geometry import (
    CovMap,
    Cylinder,
    Point,
    compose,
    da,
    dGS,
    dilate,
    inverse,
    kdistance,
    knorm,
    offset_from,
    origin,
)
from .kinetic_polynomials_holder import (
    KMultiIndex,
    KPolynomial,
    SampleSpec,
    holder_norm_est,
    increment_v,
    increment_x,
    kdeg,
    seminorm_est,
    sup_norm_est,
    taylor_expansion,
    weighted_norm_est,
)
from .numerics import (
    FitResult,
    QuadratureSpec,
    derive_seed,
    fit_power_law,
    rng_for,
    sphere_grid,
)
from .params_profiles import (
    CompactBump,
    DecayEnvelope,
    GaussianComponent,
    HydroBounds,
    ModelParams,
    Profile,
    decay_envelope,
    hydro_gate,
    hydro_quantities,
    make_inverse_power_params,
    maxwellian,
)

__version__ = "0.1.0"
