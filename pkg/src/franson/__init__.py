"""Local hidden-variable simulator for the Franson two-photon interference experiment.

The package pairs a Monte Carlo implementation of a local hidden-variable
model with an exact quantum-mechanical reference and a physical-scale
timing simulator, so that every fringe, singles and timing statistic can be
checked against an independent prediction.
"""

from franson.angles import wrap_phase
from franson.quantum import (
    ExperimentSetting,
    ProbabilityQuad,
    SettingPhases,
    TwoPhotonState,
    qm_probabilities,
    qm_probabilities_from_state,
    setting_from_arm_imbalance,
)
from franson.hidden import (
    Shape,
    branch_sign,
    density,
    effective_phase,
    phase_cdf,
    pushforward_residual,
    sample_phase,
    transform,
)
from franson.montecarlo import (
    Detector,
    EventCounts,
    RunSpec,
    Slot,
    TrialOutcome,
    classify_event,
    detector_response,
    run_batch,
    run_trial,
    sample_shape,
)
from franson.timing import (
    CoincidenceVerdict,
    TimestampPair,
    TimingScales,
    arrival_times,
    coincidence_classify,
    default_scales,
    time_difference_histogram,
)

__version__ = "0.1.0"

__all__ = [
    "CoincidenceVerdict",
    "Detector",
    "EventCounts",
    "ExperimentSetting",
    "ProbabilityQuad",
    "RunSpec",
    "SettingPhases",
    "Shape",
    "Slot",
    "TimestampPair",
    "TimingScales",
    "TrialOutcome",
    "TwoPhotonState",
    "arrival_times",
    "branch_sign",
    "classify_event",
    "coincidence_classify",
    "default_scales",
    "density",
    "detector_response",
    "effective_phase",
    "phase_cdf",
    "pushforward_residual",
    "qm_probabilities",
    "qm_probabilities_from_state",
    "run_batch",
    "run_trial",
    "sample_phase",
    "sample_shape",
    "setting_from_arm_imbalance",
    "time_difference_histogram",
    "transform",
    "wrap_phase",
]
