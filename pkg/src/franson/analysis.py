"""Estimation, goodness of fit, fringe scans and sinusoid fitting."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, stats

from franson.angles import TWO_PI, wrap_phase
from franson.hidden import phase_cdf, transform
from franson.montecarlo import EventCounts, RunSpec, RunTally, derive_seed, run_tallies
from franson.quantum import ProbabilityQuad, qm_probabilities, setting_from_arm_imbalance
from franson.timing import TimingScales, default_scales

Z_SCORE = 4.0

SCAN_COLUMNS = (
    "delta_l_um", "n_total", "n1", "n2", "n3", "n4",
    "p1_hat", "p2_hat", "p3_hat", "p4_hat",
    "ci1", "ci2", "ci3", "ci4",
    "p1_qm", "p2_qm", "p3_qm", "p4_qm",
)


class FitFailure(RuntimeError):
    """Least-squares fringe fit did not converge."""

    def __init__(self, message: str, best_residual_rms: float = math.nan):
        super().__init__(f"{message} (best residual rms {best_residual_rms:.3g})")
        self.best_residual_rms = best_residual_rms


@dataclass(frozen=True)
class ProbEstimate:
    p_hat: float
    ci_half_width: float

    def contains(self, p: float) -> bool:
        return abs(self.p_hat - p) <= self.ci_half_width


def binomial_half_width(p: float, n: int, z: float = Z_SCORE) -> float:
    """Normal-approximation half width ``z*sqrt(p(1-p)/n)``."""
    return z * math.sqrt(max(p * (1.0 - p), 0.0) / n)


def estimate_quad(counts: EventCounts, z: float = Z_SCORE) -> tuple[ProbEstimate, ...]:
    if counts.n_total <= 0:
        raise ValueError("cannot estimate probabilities from zero trials")
    out = []
    for n_i in counts.as_tuple():
        p = n_i / counts.n_total
        out.append(ProbEstimate(p, binomial_half_width(p, counts.n_total, z)))
    return tuple(out)


def ks_statistic(samples, cdf: Callable = phase_cdf) -> float:
    """One-sample Kolmogorov-Smirnov distance between ``samples`` and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("KS statistic needs at least one sample")
    if n < 10:
        raise ValueError(f"KS statistic needs at least 10 samples, got {n}")
    f = np.asarray(cdf(x), dtype=float)
    d_plus = np.max(np.arange(1, n + 1) / n - f)
    d_minus = np.max(f - np.arange(0, n) / n)
    return float(max(d_plus, d_minus))


def ks_bound(n: int) -> float:
    """Critical KS distance at alpha ~ 0.001."""
    return 1.95 / math.sqrt(n)


@dataclass(frozen=True)
class ScanRow:
    delta_l: float
    counts: EventCounts
    quad_hat: tuple[ProbEstimate, ...]
    quad_qm: ProbabilityQuad
    singles: object = None


@dataclass(frozen=True)
class FringeScan:
    rows: tuple[ScanRow, ...]
    lambda_p: float

    @property
    def delta_l(self) -> np.ndarray:
        return np.array([r.delta_l for r in self.rows])

    def p_hat(self, channel: int) -> np.ndarray:
        return np.array([r.quad_hat[channel - 1].p_hat for r in self.rows])

    def ci(self, channel: int) -> np.ndarray:
        return np.array([r.quad_hat[channel - 1].ci_half_width for r in self.rows])

    def p_qm(self, channel: int) -> np.ndarray:
        return np.array([r.quad_qm.as_tuple()[channel - 1] for r in self.rows])

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SCAN_COLUMNS)
        for r in self.rows:
            c = r.counts
            writer.writerow(
                [_g9(r.delta_l), c.n_total, c.n1, c.n2, c.n3, c.n4]
                + [_g9(e.p_hat) for e in r.quad_hat]
                + [_g9(e.ci_half_width) for e in r.quad_hat]
                + [_g9(p) for p in r.quad_qm.as_tuple()]
            )
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())


def _g9(x: float) -> str:
    return f"{x:.9g}"


def scan_fringes(
    delta_l_grid: Sequence[float],
    spec: RunSpec,
    scales: TimingScales | None = None,
    threads: int = 1,
) -> FringeScan:
    """Run the model at each arm imbalance (um) of ``delta_l_grid``.

    Point ``i`` uses the child seed ``derive_seed(spec.seed, i)``, so rows are
    independent and reproducible.
    """
    grid = np.asarray(delta_l_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("delta_l grid is empty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("delta_l grid must be strictly increasing")
    scales = scales or default_scales()
    rows = []
    for i, dl in enumerate(grid):
        setting = setting_from_arm_imbalance(float(dl), scales.lambda_p_um)
        point_spec = RunSpec(derive_seed(spec.seed, i), spec.n_trials, spec.batch_size)
        result: RunTally = run_tallies(setting, point_spec, threads)
        rows.append(ScanRow(float(dl), result.events, estimate_quad(result.events), qm_probabilities(setting), result.singles))
    return FringeScan(tuple(rows), scales.lambda_p_um)


@dataclass(frozen=True)
class FringeFit:
    """Best fit of ``offset + amplitude*cos(2*pi*delta_l/period + phase0)``."""

    offset: float
    amplitude: float
    period: float
    phase0: float
    visibility: float
    residual_rms: float
    stderr: tuple[float, float, float, float]
    channel: int
    n_points: int

    @property
    def amplitude_ci(self) -> tuple[float, float]:
        half = Z_SCORE * self.stderr[1]
        return (self.amplitude - half, self.amplitude + half)

    @property
    def amplitude_consistent_with_zero(self) -> bool:
        lo, hi = self.amplitude_ci
        return lo <= 0.0 <= hi

    def to_dict(self) -> dict:
        return {
            "channel": self.channel,
            "offset": self.offset,
            "amplitude": self.amplitude,
            "period_um": self.period,
            "phase0": self.phase0,
            "visibility": self.visibility,
            "residual_rms": self.residual_rms,
            "stderr": dict(zip(("offset", "amplitude", "period_um", "phase0"), self.stderr)),
            "n_points": self.n_points,
        }


def cosine_model(x, offset, amplitude, period, phase0):
    return offset + amplitude * np.cos(TWO_PI * np.asarray(x) / period + phase0)


def fit_cosine(x, y, period0: float, channel: int = 0, max_nfev: int = 2000) -> FringeFit:
    """Nonlinear least-squares single-cosine fit started from ``period0``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 8:
        raise ValueError(f"need at least 8 points to fit a fringe, got {x.size}")
    if np.ptp(x) < 1.5 * period0:
        raise ValueError(f"points span {np.ptp(x):.4g}, less than 1.5 periods of {period0:.4g}")

    a0 = float(np.mean(y))
    b0 = float(np.ptp(y) / 2)
    phase = np.sum((y - a0) * np.exp(-1j * TWO_PI * x / period0))
    p0 = np.array([a0, b0, period0, float(np.angle(phase))])

    def residuals(p):
        return cosine_model(x, *p) - y

    try:
        res = optimize.least_squares(
            residuals, p0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev
        )
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise FitFailure(f"fringe fit failed: {exc}", float(np.sqrt(np.mean(residuals(p0) ** 2)))) from exc
    rms = float(np.sqrt(np.mean(res.fun**2)))
    if res.status <= 0 or not np.all(np.isfinite(res.x)):
        raise FitFailure(f"fringe fit did not converge: {res.message}", rms)

    offset, amplitude, period, phase0 = res.x
    if amplitude < 0:
        amplitude, phase0 = -amplitude, phase0 + math.pi
    if period < 0:
        period, phase0 = -period, -phase0
    if offset <= 0:
        raise FitFailure("fitted offset is not positive", rms)

    dof = max(x.size - 4, 1)
    s2 = float(np.sum(res.fun**2)) / dof
    cov = np.linalg.pinv(res.jac.T @ res.jac) * s2
    stderr = tuple(float(v) for v in np.sqrt(np.abs(np.diag(cov))))
    return FringeFit(
        offset=float(offset),
        amplitude=float(amplitude),
        period=float(period),
        phase0=wrap_phase(phase0),
        visibility=float(amplitude / offset),
        residual_rms=rms,
        stderr=stderr,
        channel=channel,
        n_points=int(x.size),
    )


def fit_fringe(scan: FringeScan, channel: int = 1) -> FringeFit:
    """Fit a cosine fringe to one outcome channel of ``scan`` (over delta_l, um)."""
    if channel not in (1, 2, 3, 4):
        raise ValueError(f"channel must be 1..4, got {channel!r}")
    return fit_cosine(scan.delta_l, scan.p_hat(channel), scan.lambda_p, channel)


@dataclass(frozen=True)
class SlopeEstimate:
    slope: float
    stderr: float

    @property
    def ci(self) -> tuple[float, float]:
        return (self.slope - Z_SCORE * self.stderr, self.slope + Z_SCORE * self.stderr)

    @property
    def contains_zero(self) -> bool:
        lo, hi = self.ci
        return lo <= 0.0 <= hi


def regression_slope(x, y) -> SlopeEstimate:
    fit = stats.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return SlopeEstimate(float(fit.slope), float(fit.stderr))


class Comparator(str, enum.Enum):
    MINUS = "minus"
    PLUS = "plus"


def max_deviation_from_linear(dtilde_grid, phi_grid, comparator: Comparator | str = Comparator.MINUS) -> float:
    """Largest circular distance between the transform and a rigid phase shift.

    ``MINUS`` compares with ``wrap(phi - dtilde)``, which shares the
    transform's zeros; ``PLUS`` compares with ``wrap(phi + dtilde)``.
    """
    comparator = Comparator(comparator)
    dt = np.asarray(dtilde_grid, dtype=float).ravel()
    phi = np.asarray(phi_grid, dtype=float).ravel()
    if dt.size == 0 or phi.size == 0:
        raise ValueError("deviation grids must be non-empty")
    sign = -1.0 if comparator is Comparator.MINUS else 1.0
    worst = 0.0
    # row-wise keeps memory at O(len(phi))
    for d in dt:
        diff = wrap_phase(transform(phi, d) - (phi + sign * d))
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst
