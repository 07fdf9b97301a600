"""Pulse-sequence construction: UDD timings, nested QDD layouts, switching functions.

A sequence is stored in relative time, with every pulse instant in the open
interval (0, 1); the physical duration is a separate scale factor.  The
switching function of a single-axis sequence is the piecewise-constant sign
picked up by a perpendicular coupling in the toggling frame: it starts at +1
and flips at every pulse.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PulseAxis",
    "Pulse",
    "PulseSequence",
    "SwitchingFunction",
    "udd_times",
    "switching_function",
    "qdd_sequence",
]


class PulseAxis(enum.Enum):
    """Rotation axis of an instantaneous pi pulse."""

    X = "X"
    Y = "Y"
    Z = "Z"

    def perpendicular_to(self, other: "PulseAxis") -> bool:
        return self is not other


@dataclass(frozen=True)
class Pulse:
    """A single instantaneous pi pulse at relative time ``t`` about ``axis``."""

    t: float
    axis: PulseAxis


@dataclass(frozen=True)
class PulseSequence:
    """Ordered pi pulses at relative instants in (0, 1) plus a total duration.

    The no-pulse sequence (``pulses=()``) is allowed and acts as the free
    evolution control.
    """

    pulses: tuple[Pulse, ...]
    duration: float = 1.0

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        prev = 0.0
        for p in self.pulses:
            if not 0.0 < p.t < 1.0:
                raise ValueError(f"pulse instant {p.t} outside (0, 1)")
            if p.t <= prev:
                raise ValueError("pulse instants must be strictly increasing")
            prev = p.t

    @property
    def instants(self) -> np.ndarray:
        return np.array([p.t for p in self.pulses])

    @property
    def axes(self) -> tuple[PulseAxis, ...]:
        return tuple(p.axis for p in self.pulses)

    def rescaled(self, duration: float) -> "PulseSequence":
        """Same relative layout with a different physical duration."""
        return PulseSequence(self.pulses, duration)

    @classmethod
    def udd(cls, n: int, axis: PulseAxis = PulseAxis.X, duration: float = 1.0) -> "PulseSequence":
        times = udd_times(n)
        return cls(tuple(Pulse(float(t), axis) for t in times), duration)

    @classmethod
    def free(cls, duration: float = 1.0) -> "PulseSequence":
        """The explicit no-pulse control."""
        return cls((), duration)


@dataclass(frozen=True)
class SwitchingFunction:
    """Piecewise-constant +/-1 signal on [0, 1] flipping at each breakpoint."""

    breakpoints: tuple[float, ...]
    initial_sign: int = 1

    def __post_init__(self):
        if self.initial_sign not in (-1, 1):
            raise ValueError("initial_sign must be +1 or -1")
        prev = 0.0
        for b in self.breakpoints:
            if not 0.0 < b < 1.0:
                raise ValueError(f"breakpoint {b} outside (0, 1)")
            if b <= prev:
                raise ValueError("breakpoints must be strictly increasing")
            prev = b

    @property
    def signs(self) -> np.ndarray:
        """Sign on each of the ``len(breakpoints) + 1`` intervals."""
        k = np.arange(len(self.breakpoints) + 1)
        return self.initial_sign * (-1) ** k

    def __call__(self, t):
        """Evaluate F(t); at a breakpoint the right-hand value is returned."""
        t = np.asarray(t)
        idx = np.searchsorted(self.breakpoints, t, side="right")
        return self.initial_sign * (-1.0) ** idx

    def flipped(self) -> "SwitchingFunction":
        return SwitchingFunction(self.breakpoints, -self.initial_sign)


def udd_times(n: int) -> np.ndarray:
    """Relative instants sin^2(j*pi/(2n+2)), j = 1..n, of the n-pulse UDD sequence.

    Parameters
    ----------
    n : int
        Number of pulses, at least 1.

    Returns
    -------
    numpy.ndarray
        Strictly increasing instants in (0, 1), symmetric about 1/2.
    """
    if n < 1:
        raise ValueError("empty sequence")
    j = np.arange(1, n + 1)
    return np.sin(j * math.pi / (2 * n + 2)) ** 2


def switching_function(seq: PulseSequence, coupling_axis: PulseAxis) -> SwitchingFunction:
    """Switching function picked up by the coupling along ``coupling_axis``.

    Every pulse of ``seq`` must be perpendicular to the coupling axis; a pulse
    about the coupling axis itself leaves the coupling invariant and has no
    switching action.
    """
    for p in seq.pulses:
        if not p.axis.perpendicular_to(coupling_axis):
            raise ValueError("pulse does not toggle this coupling")
    return SwitchingFunction(tuple(p.t for p in seq.pulses), initial_sign=1)


def qdd_sequence(
    n_outer: int,
    n_inner: int,
    outer_axis: PulseAxis = PulseAxis.X,
    inner_axis: PulseAxis = PulseAxis.Z,
    duration: float = 1.0,
) -> PulseSequence:
    """Nest an inner UDD sequence into every interval of an outer UDD sequence.

    The outer layer places ``n_outer`` pulses about ``outer_axis`` at UDD
    instants; each of the ``n_outer + 1`` outer intervals [a, b] carries an
    inner UDD sequence of ``n_inner`` pulses about ``inner_axis`` at
    a + (b - a) * udd_times(n_inner).  Inner instants are strictly interior,
    so at an outer instant the inner block has already completed and the
    outer pulse fires after it; no two pulses coincide.
    """
    if n_outer < 1 or n_inner < 1:
        raise ValueError("empty sequence")
    if not outer_axis.perpendicular_to(inner_axis):
        raise ValueError("outer and inner axes must be perpendicular")
    outer = udd_times(n_outer)
    edges = np.concatenate(([0.0], outer, [1.0]))
    inner_rel = udd_times(n_inner)
    pulses: list[Pulse] = []
    for k in range(len(edges) - 1):
        a, b = edges[k], edges[k + 1]
        for t in a + (b - a) * inner_rel:
            pulses.append(Pulse(float(t), inner_axis))
        if k < len(edges) - 2:
            pulses.append(Pulse(float(edges[k + 1]), outer_axis))
    return PulseSequence(tuple(pulses), duration)
