"""Loewner chains, SLE sampling, Loewner energy and rare-event Monte Carlo."""

from .bessel import (
    BesselPath,
    bessel_hit_ensemble,
    exact_hit_probability,
    q_drift,
    simulate_bessel,
    simulate_Z,
    stay_small_bound,
    stay_small_mc,
)
from .chordal import (
    SlitChain,
    Swallowed,
    Trace,
    chordal_forward,
    chordal_gt_eval,
    fhat_derivative,
    fhat_eval,
    hcap_of_polyline,
    make_trace,
    membership_L,
    slit_chain,
    unzip_curve,
)
from .drivers import (
    INFINITE_ENERGY,
    Driver,
    EnergyValue,
    TightnessReport,
    concat_drivers,
    dirichlet_energy,
    empty_driver,
    make_driver,
    modulus_membership_H,
    phi_modulus,
    psi_growth,
    resample_driver,
    sample_brownian_driver,
    scale_driver,
    truncate_driver,
)
from .errors import *  # noqa: F401,F403
from .experiments import (
    Event,
    RateEstimate,
    bessel_check,
    rate_experiment,
    return_prob_experiment,
    rn_martingale_check,
    tightness_experiment,
    wilson,
)
from .geometry import (
    PointCloud,
    ReturnEventSpec,
    concat_consistency,
    d_D_metric,
    hausdorff_distance,
    make_point_cloud,
    phi_H,
    return_event_hit,
    self_intersects,
    sup_metric,
    unparam_metric,
)
from .multichordal import (
    ChordEnsemble,
    LinkPattern,
    partial_potential,
    poisson_excursion_kernel,
    sample_independent_chords,
    validate_link_pattern,
)
from .radial import (
    RNWeight,
    ThetaPath,
    log_capacity,
    radial_forward,
    radial_gt_eval,
    rn_weight,
    simulate_theta,
    theta_from_trace,
)

__version__ = "0.1.0"
