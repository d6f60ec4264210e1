"""plaplab: a numerical variational laboratory for the critical p-Laplacian
Dirichlet problem -div(|grad u|^{p-2} grad u) = |u|^{p*-2} u on annuli.

The package computes annulus energy levels on the Nehari manifold (descent
and an independent shooting oracle), the Sobolev constant and the energy
quantum c_infty = S^{N/p}/N, calibrated equal-energy radial families,
symmetry-orbit thresholds, and Monte Carlo checks of the multi-bubble
norm/energy additivity identities.
"""

from ._version import __version__
from .errors import (
    DomainError,
    InconclusiveError,
    NonConvergenceError,
    NumericError,
    PlapError,
)
from .radial_core import (
    AnnulusSpec,
    RadialFunction,
    RadialGrid,
    critical_exponent,
    energy_J,
    extend_by_zero,
    grad_norm_p,
    gradient_J,
    lpstar_norm_pow,
    make_grid,
    ode_residual,
    rayleigh_Q,
    read_csv,
    sample_function,
    sphere_measure,
    write_csv,
)
from .sobolev import (
    SobolevReport,
    TalentiProfile,
    calibrate_talenti,
    dilate,
    nehari_level,
    nehari_project,
    nehari_scale,
    quantum_from_S,
    sobolev_constant,
    talenti_eval,
    talenti_integrals,
    tapered_profile,
)
from .annulus import (
    EnergyReport,
    SolveOptions,
    c_curve,
    minimize_annulus,
    scaling_check,
    shoot_annulus,
)
from .calibration import (
    CalibratedFamily,
    build_family,
    partition_radii,
    sign_changing_candidate,
    span_energy_bound,
    threshold_l0,
    threshold_l0_multi,
    threshold_small_hole,
)
from .symmetry import (
    GroupClosure,
    GroupSpec,
    OrbitReport,
    annulus_sampler,
    close_group,
    fixed_subspace,
    min_orbit_card,
    mu_G,
    orbit_separation,
    rotation_generator,
)
from .bubbles import (
    AdditivityReport,
    BubbleConfig,
    MCEstimate,
    MCParams,
    TalentiBubble,
    additivity_check,
    config_norm_p,
    energy_quantum_check,
    evaluate_config,
    two_cap_level,
)
from .cli import RunConfig, main, run

__all__ = [name for name in dir() if not name.startswith("_")]
