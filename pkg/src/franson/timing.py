"""Physical-scale timing: emission, arm delays, jitter and coincidence windows.

Photons that take the long arm of their interferometer arrive ``arm_delay``
later than those on the short arm. Offline windowing of ``t_a - t_b`` then
splits pairs into a central (simultaneous) peak and two side peaks at
``+/- arm_delay``. Timing is bookkeeping only: verdicts reproduce the slot
labels already carried by the shape, which this module cross-checks.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from franson.hidden import Shape
from franson.montecarlo import (
    TIMING_STREAM,
    EventCounts,
    RunSpec,
    RunTally,
    batch_generator,
    draw_variates,
    map_batches,
    sample_shape_array,
    simulate_trials,
    tally,
)
from franson.quantum import DEFAULT_LAMBDA_P_UM, ExperimentSetting

FWHM_TO_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))

Z_SCORE = 4.0


class ScaleOrderingError(ValueError):
    """The time scales violate coherence < arm delay < pulse width."""


@dataclass(frozen=True)
class TimingScales:
    """Characteristic scales of the experiment (times in ns, lengths in um)."""

    pulse_width_ns: float = 20.0
    arm_delay_ns: float = 2.0
    coherence_time_ns: float = 1e-4
    lambda_p_um: float = DEFAULT_LAMBDA_P_UM

    def __post_init__(self):
        values = (self.pulse_width_ns, self.arm_delay_ns, self.coherence_time_ns, self.lambda_p_um)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"timing scales must be finite: {values}")
        if self.pulse_width_ns <= 0 or self.arm_delay_ns <= 0 or self.lambda_p_um <= 0:
            raise ValueError("pulse width, arm delay and lambda_p must be positive")
        # zero coherence time is the no-jitter limit
        if self.coherence_time_ns < 0:
            raise ValueError(f"coherence time must be >= 0, got {self.coherence_time_ns!r}")
        if not self.coherence_time_ns < self.arm_delay_ns < self.pulse_width_ns:
            raise ScaleOrderingError(
                "need coherence_time < arm_delay < pulse_width, got "
                f"{self.coherence_time_ns} / {self.arm_delay_ns} / {self.pulse_width_ns} ns"
            )

    @property
    def coherence_bandwidth(self) -> float:
        """Single-photon bandwidth ~ 1/tau, in 1/ns."""
        return math.inf if self.coherence_time_ns == 0 else 1.0 / self.coherence_time_ns

    @property
    def emission_sigma_ns(self) -> float:
        return self.pulse_width_ns / FWHM_TO_SIGMA

    def to_dict(self) -> dict[str, float]:
        return {
            "pulse_width_ns": self.pulse_width_ns,
            "arm_delay_ns": self.arm_delay_ns,
            "coherence_time_ns": self.coherence_time_ns,
            "lambda_p_um": self.lambda_p_um,
        }


def default_scales() -> TimingScales:
    """Scales of the reference experiment: T = 20 ns, dt = 2 ns, tau = 0.1 ps."""
    return TimingScales()


@dataclass(frozen=True)
class TimestampPair:
    t_a: float
    t_b: float

    def __post_init__(self):
        if not (math.isfinite(self.t_a) and math.isfinite(self.t_b)):
            raise ValueError(f"timestamps must be finite, got {self.t_a!r}, {self.t_b!r}")

    @property
    def difference(self) -> float:
        return self.t_a - self.t_b


class ShapeArrays(NamedTuple):
    """Per-trial shape labels, as arrays."""

    eta_a: np.ndarray
    eta_b: np.ndarray


class CoincidenceVerdict(enum.IntEnum):
    SIMULTANEOUS = 0
    A_EARLIER = 1
    B_EARLIER = 2


def arrival_times(
    shape: Shape | ShapeArrays,
    scales: TimingScales,
    g_emit,
    g_jitter_a,
    g_jitter_b,
    base_latency: float = 0.0,
):
    """Detector timestamps for a pair.

    ``g_emit`` and the jitter arguments are standard-normal variates; the
    emission time has the pulse's Gaussian profile (FWHM = pulse width) and
    each photon picks up independent jitter of width ``coherence_time``.
    Array arguments give arrays ``(t_a, t_b)`` instead of a
    :class:`TimestampPair`.
    """
    t_e = scales.emission_sigma_ns * np.asarray(g_emit, dtype=float)
    eta_a = np.asarray(shape.eta_a)
    eta_b = np.asarray(shape.eta_b)
    t_a = t_e + base_latency + np.where(eta_a == 1, scales.arm_delay_ns, 0.0)
    t_b = t_e + base_latency + np.where(eta_b == 1, scales.arm_delay_ns, 0.0)
    t_a = t_a + scales.coherence_time_ns * np.asarray(g_jitter_a, dtype=float)
    t_b = t_b + scales.coherence_time_ns * np.asarray(g_jitter_b, dtype=float)
    if all(np.ndim(x) == 0 for x in (eta_a, eta_b, g_emit, g_jitter_a, g_jitter_b)):
        return TimestampPair(float(t_a), float(t_b))
    return t_a, t_b


def check_window(window: float, arm_delay_ns: float) -> None:
    if not 0 < window < arm_delay_ns:
        raise ValueError(
            f"coincidence window must satisfy 0 < window < arm delay ({arm_delay_ns} ns), got {window!r}"
        )


def classify_differences(diff, window: float) -> np.ndarray:
    """Verdict codes for arrays of ``t_a - t_b``."""
    diff = np.asarray(diff, dtype=float)
    return np.where(
        np.abs(diff) <= window,
        CoincidenceVerdict.SIMULTANEOUS,
        np.where(diff < 0, CoincidenceVerdict.A_EARLIER, CoincidenceVerdict.B_EARLIER),
    )


def coincidence_classify(pair: TimestampPair, window: float, arm_delay_ns: float = 2.0) -> CoincidenceVerdict:
    """Offline coincidence decision for one pair of timestamps."""
    check_window(window, arm_delay_ns)
    return CoincidenceVerdict(int(classify_differences(pair.difference, window)))


def expected_verdicts(eta_a, eta_b) -> np.ndarray:
    """Verdicts implied directly by the shape's early/late labels."""
    eta_a = np.asarray(eta_a)
    eta_b = np.asarray(eta_b)
    return np.where(
        eta_a == eta_b,
        CoincidenceVerdict.SIMULTANEOUS,
        np.where(eta_a == -1, CoincidenceVerdict.A_EARLIER, CoincidenceVerdict.B_EARLIER),
    )


@dataclass(frozen=True)
class TimingHistogram:
    """Arrival-difference counts in three bins centred on -dt, 0 and +dt."""

    bin_centers_ns: tuple[float, float, float]
    counts: tuple[int, int, int]
    outside: int
    n: int
    disagreements: int
    window_ns: float
    scales: TimingScales = field(default_factory=default_scales)

    @property
    def masses(self) -> np.ndarray:
        return np.array(self.counts, dtype=float) / self.n

    @property
    def ci_half_widths(self) -> np.ndarray:
        p = self.masses
        return Z_SCORE * np.sqrt(p * (1.0 - p) / self.n)

    @property
    def agreement(self) -> float:
        return 1.0 - self.disagreements / self.n

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bin_center_ns", "count"])
        for center, count in zip(self.bin_centers_ns, self.counts):
            writer.writerow([f"{center:.9g}", count])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    def summary(self) -> dict:
        return {
            "n": self.n,
            "window_ns": self.window_ns,
            "bins": [
                {"bin_center_ns": c, "count": k, "mass": m, "ci": ci}
                for c, k, m, ci in zip(self.bin_centers_ns, self.counts, self.masses.tolist(), self.ci_half_widths.tolist())
            ],
            "outside": self.outside,
            "verdict_slot_disagreements": self.disagreements,
            "verdict_slot_agreement": self.agreement,
        }


def _timing_variates(seed: int, batch: int, n: int) -> np.ndarray:
    return batch_generator(seed, batch, TIMING_STREAM).standard_normal((n, 3))


def time_difference_histogram(
    n: int,
    scales: TimingScales | None = None,
    window: float | None = None,
    seed: int = 0,
    batch_size: int = 100_000,
    threads: int = 1,
) -> TimingHistogram:
    """Simulate ``n`` pairs and histogram ``t_a - t_b`` into the three peaks.

    Shapes come from the same core stream as :func:`franson.montecarlo.run_batch`;
    emission and jitter come from a separate timing stream. Every verdict is
    compared with the shape-derived slot classification.
    """
    scales = scales or default_scales()
    dt = scales.arm_delay_ns
    window = dt / 4 if window is None else window
    check_window(window, dt)
    spec = RunSpec(seed=seed, n_trials=n, batch_size=batch_size)
    centers = np.array([-dt, 0.0, dt])

    def one(batch: int):
        u = draw_variates(spec, batch)
        eta_a, eta_b = sample_shape_array(u[:, 0])
        g = _timing_variates(seed, batch, len(u))
        t_a, t_b = arrival_times(ShapeArrays(eta_a, eta_b), scales, g[:, 0], g[:, 1], g[:, 2])
        diff = t_a - t_b
        nearest = np.argmin(np.abs(diff[:, None] - centers[None, :]), axis=1)
        inside = np.abs(diff - centers[nearest]) <= window
        counts = np.bincount(nearest[inside], minlength=3)
        verdicts = classify_differences(diff, window)
        mismatched = int(np.count_nonzero(verdicts != expected_verdicts(eta_a, eta_b)))
        return counts, int(np.count_nonzero(~inside)), mismatched

    parts = map_batches(one, spec.n_batches, threads)
    counts = sum(p[0] for p in parts)
    return TimingHistogram(
        bin_centers_ns=tuple(float(c) for c in centers),
        counts=tuple(int(c) for c in counts),
        outside=sum(p[1] for p in parts),
        n=n,
        disagreements=sum(p[2] for p in parts),
        window_ns=window,
        scales=scales,
    )


def run_tallies_with_timing(
    setting: ExperimentSetting,
    spec: RunSpec,
    scales: TimingScales | None = None,
    window: float | None = None,
    threads: int = 1,
) -> RunTally:
    """Like :func:`franson.montecarlo.run_tallies`, with slots read from timestamps.

    The core variates are the same as for the bare model; the simultaneous /
    non-simultaneous split and the #3/#4 orientation come from windowing
    simulated arrival times instead of from the shape labels.
    """
    scales = scales or default_scales()
    window = scales.arm_delay_ns / 4 if window is None else window
    check_window(window, scales.arm_delay_ns)
    delta = setting.delta

    def one(batch: int) -> RunTally:
        trials = simulate_trials(delta, draw_variates(spec, batch))
        g = _timing_variates(spec.seed, batch, len(trials.eta_a))
        t_a, t_b = arrival_times(ShapeArrays(trials.eta_a, trials.eta_b), scales, g[:, 0], g[:, 1], g[:, 2])
        verdict = classify_differences(t_a - t_b, window)
        event = np.where(
            verdict == CoincidenceVerdict.SIMULTANEOUS,
            np.where(trials.detector_a == trials.detector_b, 1, 2),
            np.where(verdict == CoincidenceVerdict.A_EARLIER, 3, 4),
        )
        return tally(trials, event)

    parts = map_batches(one, spec.n_batches, threads)
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return total


def run_batch_with_timing(
    setting: ExperimentSetting,
    spec: RunSpec,
    scales: TimingScales | None = None,
    window: float | None = None,
    threads: int = 1,
) -> EventCounts:
    return run_tallies_with_timing(setting, spec, scales, window, threads).events
