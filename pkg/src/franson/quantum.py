"""Quantum-mechanical reference predictions for the ideal Franson experiment.

Two independent routes to the four outcome probabilities are provided:

* :func:`qm_probabilities` evaluates the closed-form fringe law, and
* :func:`qm_probabilities_from_state` builds the two-photon product state
  explicitly and projects it on the measurement basis.

Each serves as the other's oracle. Only the summed interferometer phase is
physical, so settings carry a single total phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from franson.angles import TWO_PI, wrap_phase

#: Pump wavelength of the reference experiment, in micrometres.
DEFAULT_LAMBDA_P_UM = 0.3511

ORACLE_ATOL = 1e-12

_SQRT_HALF = 1.0 / math.sqrt(2.0)

# Joint basis ordering: xi1xi1, xi1xi2, xi2xi1, xi2xi2 (photon A is the
# leading tensor factor).
MEASUREMENT_BASIS = np.array(
    [
        [_SQRT_HALF, 0.0, 0.0, 1j * _SQRT_HALF],
        [_SQRT_HALF, 0.0, 0.0, -1j * _SQRT_HALF],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class SettingPhases:
    """Controllable interferometer phases of photons A and B, in radians."""

    phi_a: float
    phi_b: float

    def __post_init__(self):
        if not (math.isfinite(self.phi_a) and math.isfinite(self.phi_b)):
            raise ValueError(f"phases must be finite, got {self.phi_a!r}, {self.phi_b!r}")

    @property
    def total(self) -> float:
        return self.phi_a + self.phi_b


@dataclass(frozen=True)
class ExperimentSetting:
    """One interferometer setting, fixed by the arm imbalance.

    ``total_phase`` and ``delta`` are recomputed from ``delta_l`` and
    ``lambda_p`` on access and never stored separately.
    """

    delta_l: float
    lambda_p: float = DEFAULT_LAMBDA_P_UM

    def __post_init__(self):
        if not math.isfinite(self.lambda_p) or self.lambda_p <= 0:
            raise ValueError(f"lambda_p must be positive, got {self.lambda_p!r}")
        if not math.isfinite(self.delta_l) or self.delta_l < 0:
            raise ValueError(f"delta_l must be finite and non-negative, got {self.delta_l!r}")

    @property
    def total_phase(self) -> float:
        """Summed phase ``2*pi*delta_l/lambda_p`` (radians, unwrapped)."""
        return TWO_PI * self.delta_l / self.lambda_p

    @property
    def delta(self) -> float:
        """Fringe argument ``total_phase - pi/2`` wrapped into [-pi, pi)."""
        return wrap_phase(self.total_phase - math.pi / 2)

    @classmethod
    def from_total_phase(cls, total_phase: float, lambda_p: float = DEFAULT_LAMBDA_P_UM):
        """Setting whose total phase equals ``total_phase`` modulo 2*pi."""
        reduced = math.fmod(total_phase, TWO_PI)
        if reduced < 0:
            reduced += TWO_PI
        return cls(delta_l=reduced * lambda_p / TWO_PI, lambda_p=lambda_p)

    @classmethod
    def from_delta(cls, delta: float, lambda_p: float = DEFAULT_LAMBDA_P_UM):
        """Setting with fringe argument ``delta`` (up to rounding)."""
        return cls.from_total_phase(delta + math.pi / 2, lambda_p)


@dataclass(frozen=True)
class ProbabilityQuad:
    """Exact distribution over the four outcomes #1..#4."""

    p1: float
    p2: float
    p3: float
    p4: float

    def __post_init__(self):
        for name, p in zip(("p1", "p2", "p3", "p4"), self.as_tuple()):
            if not (-ORACLE_ATOL <= p <= 1.0 + ORACLE_ATOL):
                raise ValueError(f"{name}={p!r} is not a probability")
        if abs(sum(self.as_tuple()) - 1.0) > ORACLE_ATOL:
            raise ValueError(f"probabilities sum to {sum(self.as_tuple())!r}, not 1")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p1, self.p2, self.p3, self.p4)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple())

    def max_abs_diff(self, other: "ProbabilityQuad") -> float:
        return float(np.max(np.abs(self.as_array() - other.as_array())))

    def to_dict(self) -> dict[str, float]:
        return {"p1": self.p1, "p2": self.p2, "p3": self.p3, "p4": self.p4}


@dataclass(frozen=True)
class TwoPhotonState:
    """Pure two-photon state as four amplitudes over the joint basis."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (4,):
            raise ValueError(f"expected 4 amplitudes, got shape {amps.shape}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > ORACLE_ATOL:
            raise ValueError(f"state is not normalised (squared norm {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_phases(cls, phases: SettingPhases) -> "TwoPhotonState":
        """Product of the two single-photon superpositions (xi1 + e^{i phi} xi2)/sqrt 2."""
        single_a = np.array([1.0, np.exp(1j * phases.phi_a)]) * _SQRT_HALF
        single_b = np.array([1.0, np.exp(1j * phases.phi_b)]) * _SQRT_HALF
        return cls(np.kron(single_a, single_b))

    def project(self, basis: np.ndarray = MEASUREMENT_BASIS) -> np.ndarray:
        """Return ``|<c_i|psi>|^2`` for each row ``c_i`` of ``basis``."""
        overlaps = basis.conj() @ self.amplitudes
        return np.abs(overlaps) ** 2


def qm_probabilities(setting: ExperimentSetting) -> ProbabilityQuad:
    """Closed-form outcome probabilities for ``setting``."""
    c = math.cos(setting.delta)
    return ProbabilityQuad(0.25 * (1.0 + c), 0.25 * (1.0 - c), 0.25, 0.25)


def qm_probabilities_from_state(phases: SettingPhases) -> ProbabilityQuad:
    """Outcome probabilities by explicit projection of the two-photon state."""
    p = TwoPhotonState.from_phases(phases).project()
    return ProbabilityQuad(*(float(x) for x in p))


def setting_from_arm_imbalance(delta_l: float, lambda_p: float = DEFAULT_LAMBDA_P_UM) -> ExperimentSetting:
    """Build a setting from the arm imbalance ``delta_l`` (um) and pump wavelength (um)."""
    if not lambda_p > 0:
        raise ValueError(f"lambda_p must be positive, got {lambda_p!r}")
    if not delta_l >= 0:
        raise ValueError(f"delta_l must be non-negative, got {delta_l!r}")
    return ExperimentSetting(delta_l=float(delta_l), lambda_p=float(lambda_p))
