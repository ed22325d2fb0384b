"""Simulation of quantum noise spectroscopy through repeated weak measurements.

A probe qubit dephases under a bath operator A while the bath evolves under
B; stroboscopic Ramsey cycles turn the bath's noise correlation function
into measurable outcome correlations, whose Fourier transform reconstructs
the noise spectrum. The package provides exact channel-level simulation,
the closed-form weak-measurement limit, correlation spectroscopy, Monte
Carlo trajectory sampling, dynamical-decoupling control, spectral
reconstruction, and a resource-comparison harness, plus a CLI (``qspec``).
"""

__version__ = "0.1.0"

from .baths import (
    BathModel,
    CentralSpinSpec,
    DissipationSpec,
    SpinBosonSpec,
    build_central_spin,
    build_spin_boson,
    dissipative_free_evolution,
    effective_larmor,
    effective_norm,
    exact_boson_channel,
    make_bath,
    single_mode_bath,
    single_qubit_bath,
    spin_boson_mode_baths,
)
from .channels import (
    ConcatenatedChannel,
    KrausChannel,
    RimConfig,
    SpectralDecomposition,
    build_cycle,
    build_free_evolution_channel,
    build_rim_channel,
    concatenate,
    perturbative_channel,
    perturbative_modes,
    spectral_decompose,
)
from .comparison import ResourceReport, run_comparison, time_to_reach
from .correlation import (
    CorrelationSeries,
    ModeTable,
    analytic_correlation,
    channel_correlation_stream,
    correlation_spectroscopy,
    exact_channel_correlation,
    mode_table,
    weak_correlation,
)
from .decoupling import (
    ConditionalEvolver,
    CpmgConfig,
    conditional_cycle,
    conditional_propagators,
    decoupling_defect,
    trajectory_free_step,
)
from .errors import QspecError, WeakMeasurementViolation
from .spectrum import (
    PeakAnnotation,
    Spectrum,
    estimation_error,
    find_peaks,
    reconstruct_spectrum,
    validate_sampling,
)
from .trajectories import (
    SamplePlan,
    TrajectoryBatch,
    TrajectoryRecord,
    estimate_correlation,
    plan_samples,
    sample_trajectories,
    sample_trajectory,
)

__all__ = [
    "__version__",
    "BathModel", "CentralSpinSpec", "DissipationSpec", "SpinBosonSpec",
    "build_central_spin", "build_spin_boson", "dissipative_free_evolution",
    "effective_larmor", "effective_norm", "exact_boson_channel", "make_bath",
    "single_mode_bath", "single_qubit_bath", "spin_boson_mode_baths",
    "ConcatenatedChannel", "KrausChannel", "RimConfig", "SpectralDecomposition",
    "build_cycle", "build_free_evolution_channel", "build_rim_channel",
    "concatenate", "perturbative_channel", "perturbative_modes",
    "spectral_decompose",
    "ResourceReport", "run_comparison", "time_to_reach",
    "CorrelationSeries", "ModeTable", "analytic_correlation",
    "channel_correlation_stream", "correlation_spectroscopy",
    "exact_channel_correlation", "mode_table", "weak_correlation",
    "ConditionalEvolver", "CpmgConfig", "conditional_cycle",
    "conditional_propagators", "decoupling_defect", "trajectory_free_step",
    "QspecError", "WeakMeasurementViolation",
    "PeakAnnotation", "Spectrum", "estimation_error", "find_peaks",
    "reconstruct_spectrum", "validate_sampling",
    "SamplePlan", "TrajectoryBatch", "TrajectoryRecord",
    "estimate_correlation", "plan_samples", "sample_trajectories",
    "sample_trajectory",
]
