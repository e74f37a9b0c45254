"""Wasserstein error bounds for approximate diffusions and piecewise
deterministic samplers, with simulators to check them empirically.

The package is organized in layers:

- bounds: contraction certificates, closed-form distance bounds, step
  schedules, budget accounting, and posterior curvature constants.
- metrics: empirical Wasserstein distances, contractivity estimation from
  coupled simulations, and stationarity diagnostics via the generator.
- targets: log-concave and mixture target distributions, plus logistic
  regression posteriors.
- drifts: drift fields and the perturbations studied by the bounds
  (constant offsets, linearizations, tail regularization, random drifts).
- samplers: Langevin chains, diffusion discretizations, the zig-zag
  process, a randomized Hamiltonian process, and an adaptive Metropolis
  reference sampler.
- harness: end-to-end experiments comparing empirical distances against
  the closed-form bounds, with delimited output and figures.
"""

from .bounds import (
    BudgetModel,
    ExponentialContraction,
    GLMConstants,
    KappaProfile,
    PolynomialContraction,
    StepSchedule,
    audit_record,
    bound_exponential,
    bound_pdmp,
    bound_polynomial,
    bound_stochastic,
    bound_zzp,
    budget_model,
    cert_from_kappa_profile,
    cert_from_strong_concavity,
    glm_constants,
    kappa_f,
    matched_budget_steps,
    spectral_norm,
    ula_finite_sample_bound,
    ula_step_schedule,
)
from .metrics import (
    SampleSet,
    TestFunction,
    coordinate,
    coordinate_sin,
    coordinate_square,
    distance_record,
    estimate_contractivity,
    generator_mean,
    generator_mean_se,
    wasserstein_1d,
    wasserstein_assignment,
    wasserstein_sliced,
)
from .targets import (
    Gaussian,
    GaussianMixture2,
    GLMPosterior,
    LinkFunction,
    find_mode,
    grad_log_density,
    logistic_link,
    model_from_config,
    sample_exact,
    strong_concavity_constant,
)
from .drifts import (
    DriftField,
    StochasticDriftSpec,
    drift_error_sup,
    exact_drift,
    mode_cloud_probe,
    offset_drift,
    ou_stochastic_drift,
    tail_regularized_drift,
    taylor2_drift,
    taylor_remainder_bound,
)
from .harness import (
    ExperimentConfig,
    LogisticDataset,
    generate_logistic_data,
    load_config,
    run_experiment,
    run_fig1a,
    run_fig1b,
    run_stochastic_drift_check,
    run_zzp_check,
)
from .samplers import (
    ChainTrace,
    ZZPState,
    adaptive_mh,
    euler_maruyama,
    euler_maruyama_ensemble,
    hmc_pdmp_simulate,
    joint_stochastic_diffusion,
    joint_stochastic_ensemble,
    project_ball,
    sampleset_from_csv,
    sampleset_to_csv,
    trace_from_csv,
    trace_from_npz,
    trace_to_csv,
    trace_to_npz,
    ula_chain,
    ula_ensemble,
    zzp_positions,
    zzp_rate,
    zzp_simulate,
    zzp_time_average,
)

__version__ = "0.1.0"
