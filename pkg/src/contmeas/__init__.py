"""Simulation and analysis of continuously measured open quantum systems.

Core layers: model (validated generators and jump structure), semigroup
(deterministic characteristic functionals and master propagation),
trajectories (jump-diffusion unraveling under reference or physical law),
information (entropy functionals and mutual-entropy reports) and harness
(ensemble orchestration plus the verification suite). A FastAPI service
and a click CLI wrap the same operations.
"""

__version__ = "0.1.0"

from .errors import ContmeasError
from .harness import (
    CheckResult,
    EnsembleSeries,
    RunConfig,
    VerificationReport,
    run_config,
    self_test_suite,
    verify_gphi,
)
from .information import (
    EntropyRateTerms,
    GainLossSplit,
    McConfig,
    MutualEntropyReport,
    PurityRates,
    ShattenDecomposition,
    a_posteriori_purity,
    amount_of_information,
    classical_rel_entropy_pair,
    classical_rel_entropy_pair_rate,
    classical_rel_entropy_q,
    classical_rel_entropy_rate_q,
    entropy_rate_terms,
    information_gain_loss,
    mutual_entropy_report,
    purity_rates,
    quantum_relative_entropy,
    shatten_decompose,
    von_neumann_entropy,
)
from .model import (
    JumpChannel,
    MeasurementModel,
    generator_k,
    jump_effect,
    jump_intensity,
    jump_map,
    liouvillian,
    mean_drift,
    model_to_dict,
    normalized_jump,
    quasi_completeness_check,
    validate_model,
)
from .presets import PRESETS, load_preset
from .semigroup import (
    EquilibriumResult,
    StateSeries,
    TestFunction,
    characteristic_functional,
    equilibrium_state,
    increment_characteristic,
    propagate_master,
)
from .stats import estimate_with_se
from .trajectories import (
    RawEnsemble,
    RngStream,
    TimeGrid,
    TrajectoryPath,
    derive_seed,
    run_ensemble,
    simulate_coupled_pair,
    simulate_linear_q,
    simulate_physical,
    ybv_decomposition,
)

__all__ = [
    "CheckResult",
    "ContmeasError",
    "EnsembleSeries",
    "EntropyRateTerms",
    "EquilibriumResult",
    "GainLossSplit",
    "JumpChannel",
    "McConfig",
    "MeasurementModel",
    "MutualEntropyReport",
    "PRESETS",
    "PurityRates",
    "RawEnsemble",
    "RngStream",
    "RunConfig",
    "ShattenDecomposition",
    "StateSeries",
    "TestFunction",
    "TimeGrid",
    "TrajectoryPath",
    "VerificationReport",
    "a_posteriori_purity",
    "amount_of_information",
    "characteristic_functional",
    "classical_rel_entropy_pair",
    "classical_rel_entropy_pair_rate",
    "classical_rel_entropy_q",
    "classical_rel_entropy_rate_q",
    "derive_seed",
    "entropy_rate_terms",
    "equilibrium_state",
    "estimate_with_se",
    "generator_k",
    "increment_characteristic",
    "information_gain_loss",
    "jump_effect",
    "jump_intensity",
    "jump_map",
    "liouvillian",
    "load_preset",
    "mean_drift",
    "model_to_dict",
    "mutual_entropy_report",
    "normalized_jump",
    "propagate_master",
    "purity_rates",
    "quantum_relative_entropy",
    "quasi_completeness_check",
    "run_config",
    "run_ensemble",
    "self_test_suite",
    "shatten_decompose",
    "simulate_coupled_pair",
    "simulate_linear_q",
    "simulate_physical",
    "validate_model",
    "verify_gphi",
    "von_neumann_entropy",
    "ybv_decomposition",
]
