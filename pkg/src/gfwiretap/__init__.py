"""Wiretap coding over strictly nonlinear Gaussian random fields.

A numpy/scipy toolkit that (1) solves the decoupled-setting energy
minimization predicting the all-or-nothing collapse of exact Bayesian
decoding under random-field encoders, and (2) runs the full keyed coding
scheme at desk scale with an exact posterior-mean decoder, cross-validating
prediction against simulation.
"""

from .channel import (
    LOG2,
    WiretapParams,
    awgn_capacity,
    bin_size,
    critical_rate_heuristic,
    key_length,
    secrecy_capacity,
)
from .codec import (
    BinningPlan,
    CodecConfig,
    EncodedFrame,
    bipolar_to_message,
    build_binning,
    decode,
    encode,
    frame_from_line,
    frame_to_line,
    message_to_bipolar,
    mmse_estimate,
    random_key,
)
from .errors import BracketError, BudgetError, ConfigurationError
from .field import (
    FieldSpec,
    GaussianField,
    covariance_probe,
    evaluate,
    evaluate_flipped,
    load_field,
    sample_field,
    save_field,
)
from .numerics import (
    QuadratureRule,
    bisect_transition,
    default_rule,
    gauss_expectation,
    gauss_hermite_rule,
    log_cosh,
    minimize_scalar,
)
from .replica import (
    ReplicaConfig,
    ReplicaSolution,
    cd,
    cd_prime,
    decoupled_mi,
    effective_snr,
    energy,
    fixed_point_map,
    locate_critical_rate,
    make_config,
    phi,
    phi_prime,
    scan_rates,
    solve_overlap,
)
from .simulate import (
    LeakageEstimate,
    SimReport,
    TrialRecord,
    average_leakage_over_realizations,
    estimate_leakage,
    run_experiment,
    run_trial,
    transmit,
    write_report,
)

__version__ = "0.1.0"
