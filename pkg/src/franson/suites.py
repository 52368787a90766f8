"""Invariant suites run by ``franson verify``.

Each suite returns a list of :class:`Check` records carrying the observed
value, the bound it was held to and the verdict, ready for JSON reporting.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from franson.analysis import ks_bound, ks_statistic
from franson.angles import wrap_phase
from franson.hidden import (
    BranchConsistencyError,
    breakpoints,
    branch_index,
    density,
    pushforward_residual,
    sample_phase,
    transform,
)
from franson.quantum import (
    ORACLE_ATOL,
    ExperimentSetting,
    SettingPhases,
    qm_probabilities,
    qm_probabilities_from_state,
)
from franson.timing import TimingScales, default_scales, time_difference_histogram

JACOBIAN_TOL = 1e-6
BREAKPOINT_EXCLUSION = 1e-3
SIGN_PROBE = 1e-6
IDENTITY_TOL = 1e-12
AGREEMENT_FLOOR = 1.0 - 1e-6


@dataclass(frozen=True)
class Check:
    name: str
    observed: float
    bound: float
    relation: str
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _le(name: str, observed: float, bound: float) -> Check:
    return Check(name, float(observed), float(bound), "<=", bool(observed <= bound))


def _ge(name: str, observed: float, bound: float) -> Check:
    return Check(name, float(observed), float(bound), ">=", bool(observed >= bound))


def midpoint_grid(n: int) -> np.ndarray:
    """``n`` cell-centred points on [-pi, pi); never hits 0 or -pi."""
    return -np.pi + 2.0 * np.pi * (np.arange(n) + 0.5) / n


def interior_grid(dtilde: float, n: int = 1000, exclusion: float = BREAKPOINT_EXCLUSION) -> np.ndarray:
    """``n`` points of [-pi, pi) kept at least ``exclusion`` from every breakpoint."""
    grid = np.linspace(-np.pi, np.pi, 4 * n, endpoint=False)
    dist = np.min(np.abs(wrap_phase(grid[:, None] - breakpoints(dtilde)[None, :])), axis=1)
    kept = grid[dist > exclusion]
    picks = np.linspace(0, kept.size - 1, n).round().astype(int)
    return kept[picks]


# --- density ---------------------------------------------------------------


def density_normalization(panels: int = 10_000) -> float:
    x = np.linspace(-np.pi, np.pi, panels + 1)
    return float(integrate.simpson(density(x), x=x))


def density_suite(n: int = 1_000_000, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    samples = sample_phase(rng.random(n))
    return [
        _le("density_normalization_error", abs(density_normalization() - 1.0), 1e-9),
        _le("sampler_ks_distance", ks_statistic(samples), ks_bound(n)),
    ]


# --- transform -------------------------------------------------------------


def range_closure_violations(n: int, seed: int = 0) -> int:
    rng = np.random.default_rng(seed)
    phi = rng.uniform(-np.pi, np.pi, n)
    dtilde = rng.uniform(-np.pi, np.pi, n)
    try:
        out = transform(phi, dtilde)
    except BranchConsistencyError:
        return n
    return int(np.count_nonzero(~((out >= -np.pi) & (out < np.pi))))


def sign_change_failures(dtilde_values, probe: float = SIGN_PROBE) -> int:
    """Count breakpoints where the transform fails to change sign."""
    failures = 0
    for d in dtilde_values:
        for b in (d, wrap_phase(d - np.pi)):
            left = transform(wrap_phase(b - probe), d)
            right = transform(wrap_phase(b + probe), d)
            if np.sign(left) == np.sign(right):
                failures += 1
    return failures


def monotonicity_failures(dtilde_values, points: int = 1000) -> int:
    """Count branches on which the transform is not strictly increasing."""
    failures = 0
    for d in dtilde_values:
        edges = sorted({-np.pi, np.pi, 0.0, float(d), float(wrap_phase(d - np.pi))})
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi - lo < 1e-9:
                continue
            pts = np.linspace(lo, hi, points + 2)[1:-1]
            if np.unique(branch_index(pts, d)).size != 1:
                failures += 1
                continue
            if not np.all(np.diff(transform(pts, d)) > 0):
                failures += 1
    return failures


def transform_suite(n: int = 1_000_000, seed: int = 0) -> list[Check]:
    d50 = midpoint_grid(50)
    d20 = midpoint_grid(20)
    grid = np.linspace(-np.pi, np.pi, 10_001)[:-1]
    fixed = max(abs(transform(d, d)) for d in d50)
    return [
        _le("range_closure_violations", range_closure_violations(n, seed), 0),
        _le("fixed_point_abs", fixed, 0.0),
        _le("sign_change_failures", sign_change_failures(d50), 0),
        _le("identity_at_zero_max_error", np.max(np.abs(transform(grid, 0.0) - grid)), IDENTITY_TOL),
        _le("branch_monotonicity_failures", monotonicity_failures(d20), 0),
    ]


# --- measure preservation --------------------------------------------------


def max_jacobian_residual(dtilde_values, points: int = 1000) -> float:
    return max(float(np.max(pushforward_residual(interior_grid(d, points), d))) for d in dtilde_values)


def pushforward_ks(dtilde: float, n: int, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    return ks_statistic(transform(sample_phase(rng.random(n)), dtilde))


PUSHFORWARD_DTILDES = (-2.5, -np.pi / 4, 0.0, np.pi / 3, 2.9)


def measure_suite(n: int = 1_000_000, seed: int = 0) -> list[Check]:
    checks = [_le("jacobian_residual_max", max_jacobian_residual(midpoint_grid(20)), JACOBIAN_TOL)]
    for i, d in enumerate(PUSHFORWARD_DTILDES):
        checks.append(_le(f"pushforward_ks[dtilde={d:.4f}]", pushforward_ks(d, n, seed + i), ks_bound(n)))
    return checks


# --- quantum oracle --------------------------------------------------------


def oracle_max_difference(n: int = 10_000, seed: int = 0) -> tuple[float, float, float]:
    """(closed form vs projection, gauge shift, normalisation) worst errors."""
    rng = np.random.default_rng(seed)
    phases = rng.uniform(-np.pi, np.pi, (n, 2))
    shifts = rng.uniform(-np.pi, np.pi, n)
    worst = gauge = norm = 0.0
    for (pa, pb), x in zip(phases, shifts):
        proj = qm_probabilities_from_state(SettingPhases(pa, pb))
        closed = qm_probabilities(ExperimentSetting.from_total_phase(pa + pb))
        shifted = qm_probabilities_from_state(SettingPhases(pa + x, pb - x))
        worst = max(worst, proj.max_abs_diff(closed))
        gauge = max(gauge, proj.max_abs_diff(shifted))
        norm = max(norm, abs(sum(proj.as_tuple()) - 1.0), abs(sum(closed.as_tuple()) - 1.0))
    return worst, gauge, norm


def oracle_suite(n: int = 10_000, seed: int = 0) -> list[Check]:
    worst, gauge, norm = oracle_max_difference(min(n, 10_000), seed)
    return [
        _le("closed_form_vs_projection", worst, ORACLE_ATOL),
        _le("gauge_invariance", gauge, ORACLE_ATOL),
        _le("normalization", norm, ORACLE_ATOL),
    ]


# --- timing ----------------------------------------------------------------


def timing_suite(
    n: int = 1_000_000,
    seed: int = 0,
    scales: TimingScales | None = None,
    window: float | None = None,
    threads: int = 1,
) -> list[Check]:
    scales = scales or default_scales()
    hist = time_difference_histogram(n, scales, window, seed=seed, threads=threads)
    checks = []
    for center, mass, expected in zip(hist.bin_centers_ns, hist.masses, (0.25, 0.5, 0.25)):
        bound = 4.0 * math.sqrt(expected * (1 - expected) / n)
        checks.append(_le(f"mass_error[{center:+.3g} ns]", abs(mass - expected), bound))
    checks.append(_ge("verdict_slot_agreement", hist.agreement, AGREEMENT_FLOOR))
    exact = TimingScales(scales.pulse_width_ns, scales.arm_delay_ns, 0.0, scales.lambda_p_um)
    no_jitter = time_difference_histogram(min(n, 100_000), exact, window, seed=seed, threads=threads)
    checks.append(_le("no_jitter_disagreements", no_jitter.disagreements, 0))
    checks.append(_le("no_jitter_outside_mass", no_jitter.outside, 0))
    return checks


SUITES = {
    "density": density_suite,
    "transform": transform_suite,
    "measure": measure_suite,
    "oracle": oracle_suite,
    "timing": timing_suite,
}


def run_suite(name: str, n: int = 1_000_000, seed: int = 0, **timing_kwargs) -> dict[str, list[Check]]:
    """Run one named suite, or every suite for ``"all"``."""
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES) + ['all']}")
    out = {}
    for suite in names:
        kwargs = timing_kwargs if suite == "timing" else {}
        out[suite] = SUITES[suite](n=n, seed=seed, **kwargs)
    return out
