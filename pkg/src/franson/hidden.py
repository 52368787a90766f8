"""Hidden-phase statistics and the phase transformation between the two exits.

A pair's hidden configuration is an angle ``phi_a`` on the circle, drawn
from the density ``|sin(phi)|/4``. The angle seen at the far interferometer
is ``phi_b = transform(phi_a, dtilde)``, a piecewise arccos map that
preserves the density. Everything here is a pure function of its inputs and
accepts either scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from franson.angles import circular_distance, wrap_phase

#: Largest tolerated excursion of an arccos argument beyond [-1, 1].
ARCCOS_CLAMP = 1e-12

DEFAULT_STEP = 1e-6


class BranchConsistencyError(RuntimeError):
    """An arccos argument fell outside [-1, 1] by more than the clamp window."""


class BoundaryProximityError(ValueError):
    """A finite-difference stencil would straddle a breakpoint of the transform."""


@dataclass(frozen=True)
class Shape:
    """Early/late signature of a pair: ``eta = -1`` is the early slot."""

    eta_a: int
    eta_b: int

    def __post_init__(self):
        if self.eta_a not in (-1, 1) or self.eta_b not in (-1, 1):
            raise ValueError(f"shape labels must be +/-1, got ({self.eta_a}, {self.eta_b})")

    @property
    def simultaneous(self) -> bool:
        return self.eta_a == self.eta_b


def _scalar_or_array(out, *inputs):
    if all(np.ndim(x) == 0 for x in inputs):
        return out.item()
    return out


def density(phi):
    """Hidden-phase probability density ``|sin(phi)|/4`` on [-pi, pi)."""
    phi = np.asarray(phi, dtype=float)
    return _scalar_or_array(0.25 * np.abs(np.sin(phi)), phi)


def phase_cdf(phi):
    """Cumulative distribution of :func:`density`, starting at -pi."""
    phi = np.asarray(phi, dtype=float)
    c = np.cos(phi)
    out = np.where(phi < 0, 0.25 * (1.0 + c), 0.5 + 0.25 * (1.0 - c))
    out = np.where(phi < -np.pi, 0.0, np.where(phi >= np.pi, 1.0, out))
    return _scalar_or_array(out, phi)


def sample_phase(u):
    """Inverse-CDF sample of the hidden phase from uniform variates ``u`` in [0, 1)."""
    u = np.asarray(u, dtype=float)
    if np.any(~((u >= 0.0) & (u < 1.0))):
        raise ValueError("uniform variates must lie in [0, 1)")
    lower = -np.arccos(np.clip(4.0 * u - 1.0, -1.0, 1.0))
    upper = np.arccos(np.clip(3.0 - 4.0 * u, -1.0, 1.0))
    out = wrap_phase(np.where(u < 0.5, lower, upper))
    return _scalar_or_array(np.asarray(out), u)


def branch_sign(phi, dtilde):
    """Sign of ``wrap(phi - dtilde)``, with zero counted as positive."""
    diff = wrap_phase(np.asarray(phi, dtype=float) - np.asarray(dtilde, dtype=float))
    out = np.where(np.asarray(diff) >= 0.0, 1, -1)
    return _scalar_or_array(out, phi, dtilde)


# Coefficient signs (of cos dtilde, cos phi, constant) in the arccos argument
# of each branch, for dtilde >= 0 and dtilde < 0 respectively.
_POS_BRANCHES = ((-1, -1, -1), (1, 1, -1), (1, -1, 1), (-1, 1, 1))
_NEG_BRANCHES = ((-1, 1, 1), (1, -1, 1), (1, 1, -1), (-1, -1, -1))


def branch_index(phi, dtilde):
    """Which of the four branches (0..3) evaluates ``transform`` at ``phi``."""
    phi = np.asarray(phi, dtype=float)
    dtilde = np.asarray(dtilde, dtype=float)
    pos = np.select([phi < dtilde - np.pi, phi < 0.0, phi < dtilde], [0, 1, 2], 3)
    neg = np.select([phi < dtilde, phi < 0.0, phi < dtilde + np.pi], [0, 1, 2], 3)
    return np.where(dtilde >= 0.0, pos, neg)


def arccos_argument(phi, dtilde):
    """The raw arccos argument of the active branch, evaluated term by term.

    This is the literal form of the map; :func:`transform` uses an
    equivalent half-angle evaluation that is better conditioned near +/-1.
    """
    phi = np.asarray(phi, dtype=float)
    dtilde = np.asarray(dtilde, dtype=float)
    sc, sk, s0 = _branch_coefficients(phi, dtilde)
    return sc * np.cos(dtilde) + sk * np.cos(phi) + s0


def _branch_coefficients(phi, dtilde):
    idx = branch_index(phi, dtilde)
    table = np.where(
        (dtilde >= 0.0)[..., None, None],
        np.array(_POS_BRANCHES, dtype=float),
        np.array(_NEG_BRANCHES, dtype=float),
    )
    coeffs = np.take_along_axis(table, idx[..., None, None], axis=-2)[..., 0, :]
    return coeffs[..., 0], coeffs[..., 1], coeffs[..., 2]


def transform(phi, dtilde):
    """Map the hidden phase at exit A onto the phase seen at exit B.

    ``phi`` and ``dtilde`` must lie in [-pi, pi) and may be broadcastable
    arrays. The result is in [-pi, pi).

    Each branch is ``q * arccos(a)`` with ``a = sc*cos(dtilde) + sk*cos(phi) + s0``.
    ``1 - a`` and ``1 + a`` are formed from half-angle products so that
    ``arccos(a) = 2*atan2(sqrt(1 - a), sqrt(1 + a))`` keeps full relative
    precision at the ends of the branch.

    Raises
    ------
    BranchConsistencyError
        If ``a`` leaves [-1, 1] by more than ``ARCCOS_CLAMP``.
    """
    phi_arr = np.asarray(phi, dtype=float)
    dt_arr = np.asarray(dtilde, dtype=float)
    phi_b, dt_b = np.broadcast_arrays(phi_arr, dt_arr)
    sc, sk, s0 = _branch_coefficients(phi_b, dt_b)

    hd = 0.5 * dt_b
    hp = 0.5 * phi_b
    one_plus_c = 2.0 * np.cos(hd) ** 2
    one_minus_c = 2.0 * np.sin(hd) ** 2
    one_plus_k = 2.0 * np.cos(hp) ** 2
    one_minus_k = 2.0 * np.sin(hp) ** 2
    c_plus_k = 2.0 * np.cos(hd + hp) * np.cos(hd - hp)
    c_minus_k = -2.0 * np.sin(hd + hp) * np.sin(hd - hp)

    # sc*cos(dtilde) + sk*cos(phi)
    linear = np.where(sc == sk, sc * c_plus_k, sc * c_minus_k)
    # 1 + sc*cos(dtilde) and 1 + sk*cos(phi), likewise with minus
    plus_c = np.where(sc > 0, one_plus_c, one_minus_c)
    plus_k = np.where(sk > 0, one_plus_k, one_minus_k)
    minus_c = np.where(sc > 0, one_minus_c, one_plus_c)
    minus_k = np.where(sk > 0, one_minus_k, one_plus_k)

    one_plus_a = np.where(s0 > 0, plus_c + plus_k, linear)
    one_minus_a = np.where(s0 > 0, -linear, minus_c + minus_k)

    worst = min(float(np.min(one_plus_a, initial=0.0)), float(np.min(one_minus_a, initial=0.0)))
    if worst < -ARCCOS_CLAMP:
        raise BranchConsistencyError(
            f"arccos argument outside [-1, 1] by {-worst:.3g}; branch selection is inconsistent"
        )
    theta = 2.0 * np.arctan2(np.sqrt(np.maximum(one_minus_a, 0.0)), np.sqrt(np.maximum(one_plus_a, 0.0)))
    q = branch_sign(phi_b, dt_b)
    out = wrap_phase(q * theta)
    return _scalar_or_array(np.asarray(out), phi, dtilde)


def effective_phase(shape: Shape, delta: float) -> float:
    """Phase argument of the transform for a pair of the given shape.

    Simultaneous shapes follow the setting (``eta_a * delta``); mixed shapes
    see the fixed value ``-eta_a * pi/2``.
    """
    if shape.eta_a == shape.eta_b:
        return wrap_phase(shape.eta_a * delta)
    return wrap_phase(-shape.eta_a * math.pi / 2)


def effective_phase_array(eta_a, eta_b, delta):
    """Vectorised :func:`effective_phase` over arrays of shape labels."""
    eta_a = np.asarray(eta_a)
    eta_b = np.asarray(eta_b)
    return np.asarray(wrap_phase(np.where(eta_a == eta_b, eta_a * delta, -eta_a * (np.pi / 2))))


def breakpoints(dtilde) -> np.ndarray:
    """Points of the circle where the transform switches branch or wraps."""
    return np.array([wrap_phase(dtilde - np.pi), 0.0, wrap_phase(dtilde), -np.pi])


def pushforward_residual(phi, dtilde, h: float = DEFAULT_STEP):
    """Pointwise defect of density preservation, ``|g(L(phi)) |L'(phi)| - g(phi)|``.

    ``L'`` is a central difference with step ``h``. Every ``phi`` must sit
    more than ``10*h`` from the breakpoints returned by :func:`breakpoints`.
    """
    if not h > 0:
        raise ValueError(f"step must be positive, got {h!r}")
    phi = np.asarray(phi, dtype=float)
    dist = circular_distance(phi[..., None], breakpoints(dtilde))
    if np.any(dist <= 10.0 * h):
        raise BoundaryProximityError(f"phi within {10 * h:g} rad of a transform breakpoint")
    slope = wrap_phase(transform(phi + h, dtilde) - transform(phi - h, dtilde)) / (2.0 * h)
    out = np.abs(density(transform(phi, dtilde)) * np.abs(slope) - density(phi))
    return _scalar_or_array(np.asarray(out), phi)
