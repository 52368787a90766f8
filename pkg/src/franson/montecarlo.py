"""Trial generation and event classification for the hidden-variable model.

A trial draws a shape and a hidden phase from two uniform variates, pushes
the phase through :func:`franson.hidden.transform`, and reads off which
detector fires on each side and in which time slot. Batches are generated
from counter-based Philox streams keyed by ``(seed, batch index)``, so the
totals depend only on ``(seed, n_trials, batch_size)`` and never on how
many threads run them.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from franson.hidden import Shape, effective_phase, effective_phase_array, sample_phase, transform
from franson.quantum import ExperimentSetting

DEFAULT_BATCH_SIZE = 100_000

CORE_STREAM = 0
TIMING_STREAM = 1


class Detector(enum.IntEnum):
    D = 0
    D_PRIME = 1

    def __str__(self):
        return "D" if self is Detector.D else "D'"


class Slot(enum.IntEnum):
    EARLY = 0
    LATE = 1


@dataclass(frozen=True)
class HiddenConfig:
    phi_a: float
    shape: Shape

    def __post_init__(self):
        if not -math.pi <= self.phi_a < math.pi:
            raise ValueError(f"phi_a={self.phi_a!r} outside [-pi, pi)")


@dataclass(frozen=True)
class TrialOutcome:
    detector_a: Detector
    detector_b: Detector
    slot_a: Slot
    slot_b: Slot
    event_class: int
    hidden: HiddenConfig | None = None
    phi_b: float | None = None


@dataclass(frozen=True)
class EventCounts:
    n1: int
    n2: int
    n3: int
    n4: int
    n_total: int

    def __post_init__(self):
        counts = self.as_tuple()
        if any(n < 0 for n in counts):
            raise ValueError(f"negative count in {counts}")
        if sum(counts) != self.n_total:
            raise ValueError(f"counts {counts} do not add up to n_total={self.n_total}")

    @classmethod
    def from_counts(cls, n1: int, n2: int, n3: int, n4: int) -> "EventCounts":
        return cls(int(n1), int(n2), int(n3), int(n4), int(n1 + n2 + n3 + n4))

    @classmethod
    def from_classes(cls, event_class: np.ndarray) -> "EventCounts":
        tally = np.bincount(np.asarray(event_class, dtype=np.int64), minlength=5)
        return cls.from_counts(*tally[1:5])

    def __add__(self, other: "EventCounts") -> "EventCounts":
        return EventCounts.from_counts(*(a + b for a, b in zip(self.as_tuple(), other.as_tuple())))

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.n1, self.n2, self.n3, self.n4)

    def frequencies(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float) / self.n_total

    def to_dict(self) -> dict[str, int]:
        return {"n_total": self.n_total, "n1": self.n1, "n2": self.n2, "n3": self.n3, "n4": self.n4}


@dataclass(frozen=True)
class SinglesCounts:
    """Per-detector totals irrespective of the partner photon."""

    a_d: int
    a_d_prime: int
    b_d: int
    b_d_prime: int

    def __add__(self, other: "SinglesCounts") -> "SinglesCounts":
        return SinglesCounts(
            self.a_d + other.a_d,
            self.a_d_prime + other.a_d_prime,
            self.b_d + other.b_d,
            self.b_d_prime + other.b_d_prime,
        )

    @property
    def n_total(self) -> int:
        return self.a_d + self.a_d_prime


@dataclass(frozen=True)
class RunTally:
    events: EventCounts
    singles: SinglesCounts

    def __add__(self, other: "RunTally") -> "RunTally":
        return RunTally(self.events + other.events, self.singles + other.singles)


@dataclass(frozen=True)
class RunSpec:
    seed: int
    n_trials: int
    batch_size: int = DEFAULT_BATCH_SIZE

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.n_trials < 1:
            raise ValueError(f"n_trials must be >= 1, got {self.n_trials!r}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size!r}")

    @property
    def n_batches(self) -> int:
        return -(-self.n_trials // self.batch_size)

    def batch_length(self, index: int) -> int:
        return min(self.batch_size, self.n_trials - index * self.batch_size)


def batch_generator(seed: int, batch: int, stream: int = CORE_STREAM) -> np.random.Generator:
    """Independent Philox generator for one (seed, batch, stream) triple."""
    key = (batch,) if stream == CORE_STREAM else (batch, stream)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def derive_seed(seed: int, index: int) -> int:
    """Child seed for the ``index``-th independent run under ``seed``."""
    ss = np.random.SeedSequence(seed, spawn_key=(2**32 - 1, index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def resolve_threads(threads: int) -> int:
    if threads < 0:
        raise ValueError(f"threads must be >= 0, got {threads!r}")
    return threads or os.cpu_count() or 1


def map_batches(fn: Callable[[int], object], n_batches: int, threads: int = 1) -> list:
    """Evaluate ``fn`` on every batch index, preserving index order."""
    workers = min(resolve_threads(threads), n_batches)
    if workers <= 1:
        return [fn(b) for b in range(n_batches)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_batches)))


def detector_response(phi):
    """``D`` on [-pi, 0) and ``D'`` on [0, pi); identical rule for both photons."""
    if np.ndim(phi) == 0:
        return Detector.D if phi < 0 else Detector.D_PRIME
    return np.where(np.asarray(phi) < 0, Detector.D, Detector.D_PRIME)


_SHAPES = (Shape(-1, -1), Shape(-1, 1), Shape(1, -1), Shape(1, 1))


def sample_shape(u: float) -> Shape:
    """Quartile of ``u`` selects (-1,-1), (-1,+1), (+1,-1), (+1,+1) in that order."""
    if not 0.0 <= u < 1.0:
        raise ValueError(f"uniform variate must lie in [0, 1), got {u!r}")
    return _SHAPES[min(int(4.0 * u), 3)]


def sample_shape_array(u) -> tuple[np.ndarray, np.ndarray]:
    quartile = np.minimum((4.0 * np.asarray(u)).astype(np.int64), 3)
    eta_a = np.where(quartile >= 2, 1, -1)
    eta_b = np.where(quartile % 2 == 1, 1, -1)
    return eta_a, eta_b


def slot_of(eta):
    if np.ndim(eta) == 0:
        return Slot.EARLY if eta == -1 else Slot.LATE
    return np.where(np.asarray(eta) == -1, Slot.EARLY, Slot.LATE)


def classify_event(detector_a, detector_b, slot_a, slot_b):
    """Event class 1..4 from detectors and time slots.

    Equal slots give #1 (same detector type) or #2 (crossed). Unequal slots
    give #3 when A is early and #4 when B is early.
    """
    scalar = all(np.ndim(x) == 0 for x in (detector_a, detector_b, slot_a, slot_b))
    det_a, det_b = np.asarray(detector_a), np.asarray(detector_b)
    s_a, s_b = np.asarray(slot_a), np.asarray(slot_b)
    out = np.where(
        s_a == s_b,
        np.where(det_a == det_b, 1, 2),
        np.where(s_a == Slot.EARLY, 3, 4),
    )
    return int(out) if scalar else out


def run_trial(setting: ExperimentSetting, u_shape: float, u_phase: float) -> TrialOutcome:
    """Single trial of the model from two uniform variates."""
    shape = sample_shape(u_shape)
    dtilde = effective_phase(shape, setting.delta)
    phi_a = sample_phase(u_phase)
    phi_b = transform(phi_a, dtilde)
    det_a, det_b = detector_response(phi_a), detector_response(phi_b)
    slot_a, slot_b = slot_of(shape.eta_a), slot_of(shape.eta_b)
    return TrialOutcome(
        detector_a=det_a,
        detector_b=det_b,
        slot_a=slot_a,
        slot_b=slot_b,
        event_class=classify_event(det_a, det_b, slot_a, slot_b),
        hidden=HiddenConfig(phi_a, shape),
        phi_b=phi_b,
    )


class TrialArrays(NamedTuple):
    eta_a: np.ndarray
    eta_b: np.ndarray
    phi_a: np.ndarray
    phi_b: np.ndarray
    detector_a: np.ndarray
    detector_b: np.ndarray
    event_class: np.ndarray


def simulate_trials(delta: float, u: np.ndarray) -> TrialArrays:
    """Vectorised :func:`run_trial` over an ``(n, 2)`` array of variates.

    Column 0 feeds the shape draw and column 1 the hidden phase.
    """
    u = np.asarray(u, dtype=float)
    eta_a, eta_b = sample_shape_array(u[:, 0])
    dtilde = effective_phase_array(eta_a, eta_b, delta)
    phi_a = sample_phase(u[:, 1])
    phi_b = transform(phi_a, dtilde)
    det_a = (phi_a >= 0).astype(np.int8)
    det_b = (phi_b >= 0).astype(np.int8)
    event = classify_event(det_a, det_b, slot_of(eta_a), slot_of(eta_b))
    return TrialArrays(eta_a, eta_b, phi_a, phi_b, det_a, det_b, event)


def draw_variates(spec: RunSpec, batch: int) -> np.ndarray:
    """The ``(n, 2)`` uniform variates of one batch; two per trial."""
    return batch_generator(spec.seed, batch).random((spec.batch_length(batch), 2))


def tally(trials: TrialArrays, event_class: np.ndarray | None = None) -> RunTally:
    events = EventCounts.from_classes(trials.event_class if event_class is None else event_class)
    n = len(trials.detector_a)
    a_dp = int(np.count_nonzero(trials.detector_a))
    b_dp = int(np.count_nonzero(trials.detector_b))
    return RunTally(events, SinglesCounts(n - a_dp, a_dp, n - b_dp, b_dp))


def run_tallies(setting: ExperimentSetting, spec: RunSpec, threads: int = 1) -> RunTally:
    """Event and singles totals over ``spec.n_trials`` trials."""
    delta = setting.delta

    def one(batch: int) -> RunTally:
        return tally(simulate_trials(delta, draw_variates(spec, batch)))

    parts = map_batches(one, spec.n_batches, threads)
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return total


def run_batch(setting: ExperimentSetting, spec: RunSpec, threads: int = 1) -> EventCounts:
    """Event-class counts for ``spec.n_trials`` trials at ``setting``."""
    return run_tallies(setting, spec, threads).events
