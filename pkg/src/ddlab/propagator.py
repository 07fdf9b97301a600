"""Time-ordered evolution under pulsed time-dependent Hamiltonians and scaling fits.

The propagator of one inter-pulse interval is built from short exponential
steps whose Hermitian generators sample the Hamiltonian inside the step
(midpoint rule at order 2, a two-node Gauss rule with one commutator at order
4), so every returned operator is unitary by construction.  Pulses are exact
instantaneous rotations exp(-i pi/2 sigma_a) = -i sigma_a.

Suppression statements are made operational by decomposing the toggling-frame
propagator over the qubit Pauli basis and fitting the log-log slope of the
qubit-affecting residual against the sequence duration inside a fixed error
window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .operators import SIGMA, SIGMA_BY_AXIS, HamiltonianSeries, expm_hermitian
from .sequence import PulseAxis, PulseSequence, SwitchingFunction, switching_function

__all__ = [
    "ConvergenceError",
    "NoAsymptoticWindowError",
    "EvolutionConfig",
    "evolve",
    "pulse_propagator",
    "toggling_frame",
    "PauliDecomposition",
    "pauli_decompose",
    "error_metric",
    "dyson_term",
    "SweepConfig",
    "ScalingReport",
    "scaling_sweep",
    "effective_propagator",
    "effective_hamiltonian",
    "FIT_WINDOW",
]

FIT_WINDOW = (1e-10, 1e-3)

_GAUSS_OFFSET = math.sqrt(3.0) / 6.0


class ConvergenceError(RuntimeError):
    """Step or grid refinement failed to converge; carries the residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class NoAsymptoticWindowError(RuntimeError):
    pass


@dataclass(frozen=True)
class EvolutionConfig:
    """One pulsed-evolution run.

    ``total_time`` is the physical duration; the sequence contributes only its
    relative pulse layout.  ``order`` selects the exponential stepper (2 =
    midpoint sample, 4 = two-node Gauss with commutator correction).  When
    ``check_tolerance`` is set, the propagator is recomputed with doubled
    steps and a :class:`ConvergenceError` is raised if the two disagree by
    more than the tolerance.
    """

    hamiltonian: HamiltonianSeries
    sequence: PulseSequence
    total_time: float
    steps_per_interval: int = 32
    order: int = 4
    check_tolerance: float | None = None

    def __post_init__(self):
        if self.total_time <= 0:
            raise ValueError("total_time must be positive")
        if self.steps_per_interval < 8:
            raise ValueError("steps_per_interval must be at least 8")
        if self.order not in (2, 4):
            raise ValueError("order must be 2 or 4")


def _interval_step(series: HamiltonianSeries, a: float, h: float, order: int) -> np.ndarray:
    if order == 2:
        return expm_hermitian(h * series.full(a + 0.5 * h))
    h1 = series.full(a + (0.5 - _GAUSS_OFFSET) * h)
    h2 = series.full(a + (0.5 + _GAUSS_OFFSET) * h)
    k = 0.5 * h * (h1 + h2) + 1j * (math.sqrt(3.0) / 12.0) * h * h * (h1 @ h2 - h2 @ h1)
    return expm_hermitian(k)


def _evolve_raw(cfg: EvolutionConfig, steps: int) -> np.ndarray:
    series = cfg.hamiltonian
    t_edges = np.concatenate(([0.0], cfg.sequence.instants, [1.0])) * cfg.total_time
    u = np.eye(series.dim, dtype=complex)
    for k, (a, b) in enumerate(zip(t_edges, t_edges[1:])):
        h = (b - a) / steps
        for j in range(steps):
            u = _interval_step(series, a + j * h, h, cfg.order) @ u
        if k < len(cfg.sequence.pulses):
            u = _pulse_unitary(cfg.sequence.pulses[k].axis, series.bath_dim) @ u
    return u


def _pulse_unitary(axis: PulseAxis, bath_dim: int) -> np.ndarray:
    # exp(-i pi/2 sigma_a) = -i sigma_a
    return np.kron(-1j * SIGMA_BY_AXIS[axis], np.eye(bath_dim, dtype=complex))


def evolve(cfg: EvolutionConfig) -> np.ndarray:
    """Propagator over [0, total_time] with pulses applied at their instants."""
    u = _evolve_raw(cfg, cfg.steps_per_interval)
    if cfg.check_tolerance is not None:
        u2 = _evolve_raw(cfg, 2 * cfg.steps_per_interval)
        residual = float(np.linalg.norm(u - u2))
        if residual > cfg.check_tolerance:
            raise ConvergenceError("step refinement did not converge", residual)
        return u2
    return u


def pulse_propagator(seq: PulseSequence, bath_dim: int) -> np.ndarray:
    """Product of the bare pulse unitaries alone, later pulses on the left."""
    u = np.eye(2 * bath_dim, dtype=complex)
    for p in seq.pulses:
        u = _pulse_unitary(p.axis, bath_dim) @ u
    return u


def toggling_frame(u: np.ndarray, seq: PulseSequence) -> np.ndarray:
    """Remove the ideal pulse action: P(T)^dag U(T)."""
    return pulse_propagator(seq, u.shape[0] // 2).conj().T @ u


@dataclass(frozen=True)
class PauliDecomposition:
    """Blocks of U = sum_alpha sigma_alpha (x) B_alpha over the qubit Pauli basis."""

    b0: np.ndarray
    bx: np.ndarray
    by: np.ndarray
    bz: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (
            np.kron(SIGMA["i"], self.b0)
            + np.kron(SIGMA["x"], self.bx)
            + np.kron(SIGMA["y"], self.by)
            + np.kron(SIGMA["z"], self.bz)
        )


def pauli_decompose(u: np.ndarray) -> PauliDecomposition:
    """Partial trace over the qubit factor: B_alpha = Tr_qubit(sigma_alpha U) / 2."""
    dim = u.shape[0]
    if dim % 2:
        raise ValueError("operator dimension must be even")
    d = dim // 2
    t = u.reshape(2, d, 2, d)
    blocks = {}
    for name, sigma in SIGMA.items():
        blocks[name] = 0.5 * np.einsum("ba,aibj->ij", sigma, t)
    return PauliDecomposition(blocks["i"], blocks["x"], blocks["y"], blocks["z"])


def error_metric(u: np.ndarray, mode: str) -> float:
    """Frobenius norm of the qubit-affecting Pauli blocks of a (toggling-frame) propagator.

    mode 'dephasing' measures the sigma_z block, 'relaxation' the transverse
    blocks, 'general' all three.  The ideal decoupled evolution is purely the
    identity block, so these are the decoherence residuals.
    """
    dec = pauli_decompose(u)
    nx, ny, nz = (np.linalg.norm(dec.bx), np.linalg.norm(dec.by), np.linalg.norm(dec.bz))
    if mode == "dephasing":
        return float(nz)
    if mode == "relaxation":
        return float(math.hypot(nx, ny))
    if mode == "general":
        return float(math.sqrt(nx**2 + ny**2 + nz**2))
    raise ValueError(f"unknown mode {mode!r}")


def _dyson_rhs(series, fval, t, state, n):
    """Right-hand side of the joint bath-level system (V, W_1, ..., W_n).

    V is the bath-only propagator, W_k the k-fold cumulative ordered integral
    of F * (V^dag A_z V); the switching value is constant inside an interval.
    """
    v = state[0]
    a_tilde = v.conj().T @ series.coupling("z", t) @ v
    out = [-1j * series.bath(t) @ v]
    for k in range(1, n + 1):
        inner = np.eye(v.shape[0], dtype=complex) if k == 1 else state[k - 1]
        out.append(fval * a_tilde @ inner)
    return out


def _dyson_run(series: HamiltonianSeries, f, n: int, total_time: float, grid: int) -> np.ndarray:
    d = series.bath_dim
    edges = np.concatenate(([0.0], np.asarray(f.breakpoints), [1.0])) * total_time
    state = [np.eye(d, dtype=complex)] + [np.zeros((d, d), dtype=complex) for _ in range(n)]
    for a, b in zip(edges, edges[1:]):
        steps = max(4, int(round(grid * (b - a) / total_time)))
        h = (b - a) / steps
        fval = float(f((a + 0.5 * (b - a)) / total_time))
        for j in range(steps):
            t0 = a + j * h
            tm = t0 + 0.5 * h
            k1 = _dyson_rhs(series, fval, t0, state, n)
            s2 = [x + 0.5 * h * k for x, k in zip(state, k1)]
            k2 = _dyson_rhs(series, fval, tm, s2, n)
            s3 = [x + 0.5 * h * k for x, k in zip(state, k2)]
            k3 = _dyson_rhs(series, fval, tm, s3, n)
            s4 = [x + h * k for x, k in zip(state, k3)]
            k4 = _dyson_rhs(series, fval, t0 + h, s4, n)
            state = [
                x + (h / 6.0) * (a1 + 2 * a2 + 2 * a3 + a4)
                for x, a1, a2, a3, a4 in zip(state, k1, k2, k3, k4)
            ]
    sigma_part = SIGMA["z"] if n % 2 else SIGMA["i"]
    return np.kron(sigma_part, state[n])


def dyson_term(
    series: HamiltonianSeries,
    f: SwitchingFunction,
    n: int,
    total_time: float,
    grid: int = 128,
    tol: float | None = None,
) -> np.ndarray:
    """n-th ordered perturbation integral of the dephasing coupling.

    Integrates u_n = int over the ordered simplex of the products
    F(t_j) A_I(t_j), with A_I the coupling in the interaction picture of the
    bath Hamiltonian, by fourth-order stepping of the equivalent cumulative
    system.  The value is computed on ``grid`` and ``2 * grid`` total steps;
    when ``tol`` is given, disagreement above it raises
    :class:`ConvergenceError`, otherwise the finer value is returned.
    """
    if n < 1 or n > 3:
        raise ValueError("dyson order must be 1..3")
    if grid < 64:
        raise ValueError("grid must be at least 64")
    coarse = _dyson_run(series, f, n, total_time, grid)
    fine = _dyson_run(series, f, n, total_time, 2 * grid)
    residual = float(np.linalg.norm(coarse - fine))
    if tol is not None and residual > tol:
        raise ConvergenceError("quadrature grid did not converge", residual)
    return fine


@dataclass(frozen=True)
class ScalingReport:
    """(duration, error) samples with a log-log slope fitted inside the window."""

    samples: tuple[tuple[float, float], ...]
    fit_window: tuple[float, float]
    slope: float
    intercept: float
    r_squared: float

    @property
    def in_window(self) -> int:
        lo, hi = self.fit_window
        return sum(1 for _, e in self.samples if lo <= e <= hi)

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "fit_window": list(self.fit_window),
            "n_samples": len(self.samples),
            "n_in_window": self.in_window,
        }


def fit_loglog(
    samples: list[tuple[float, float]], window: tuple[float, float] = FIT_WINDOW
) -> ScalingReport:
    """Least-squares slope of log error vs log duration, window-restricted."""
    lo, hi = window
    pts = [(t, e) for t, e in samples if lo <= e <= hi]
    if len(pts) < 4:
        raise NoAsymptoticWindowError("no asymptotic window; adjust T_grid")
    x = np.log10([t for t, _ in pts])
    y = np.log10([e for _, e in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return ScalingReport(tuple(samples), window, float(slope), float(intercept), r2)


@dataclass(frozen=True)
class SweepConfig:
    """A scaling experiment: one Hamiltonian, one relative sequence, one metric."""

    hamiltonian: HamiltonianSeries
    sequence: PulseSequence
    mode: str
    steps_per_interval: int = 32
    order: int = 4

    def error_at(self, total_time: float) -> float:
        cfg = EvolutionConfig(
            self.hamiltonian,
            self.sequence,
            total_time,
            self.steps_per_interval,
            self.order,
        )
        u = evolve(cfg)
        return error_metric(toggling_frame(u, self.sequence), self.mode)


def scaling_sweep(cfg: SweepConfig, t_grid, window: tuple[float, float] = FIT_WINDOW) -> ScalingReport:
    """Run the sweep over ``t_grid`` and fit the suppression exponent."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size < 8:
        raise ValueError("t_grid needs at least 8 points")
    samples = [(float(t), cfg.error_at(float(t))) for t in t_grid]
    return fit_loglog(samples, window)


def _single_axis(seq: PulseSequence) -> PulseAxis:
    axes = set(seq.axes)
    if len(axes) != 1:
        raise ValueError("effective evolution requires a single-axis primary sequence")
    return axes.pop()


def effective_propagator(
    seq: PulseSequence,
    series: HamiltonianSeries,
    t: float,
    steps_per_interval: int = 32,
    order: int = 4,
) -> np.ndarray:
    """Toggling-frame propagator of the primary sequence rescaled to duration t.

    The pulse layout is stretched to [0, t] and the evolution is generated by
    the toggled Hamiltonian (couplings perpendicular to the pulse axis carry
    the switching sign), which for a time-independent series is evaluated by
    exact per-interval exponentials regardless of step count.
    """
    if t <= 0:
        raise ValueError("duration must be positive")
    axis = _single_axis(seq) if seq.pulses else PulseAxis.Z
    f = switching_function(seq, _any_perpendicular(axis)) if seq.pulses else None
    edges = np.concatenate(([0.0], seq.instants, [1.0])) * t
    signs = f.signs if f is not None else np.array([1.0])
    u = np.eye(series.dim, dtype=complex)
    for (a, b), sign in zip(zip(edges, edges[1:]), signs):
        if series.degree == 0:
            # constant generator: a single exponential per interval is exact
            u = expm_hermitian((b - a) * series.toggled(a, float(sign), axis)) @ u
            continue
        h = (b - a) / steps_per_interval
        for j in range(steps_per_interval):
            t0 = a + j * h
            if order == 2:
                k = h * series.toggled(t0 + 0.5 * h, float(sign), axis)
            else:
                h1 = series.toggled(t0 + (0.5 - _GAUSS_OFFSET) * h, float(sign), axis)
                h2 = series.toggled(t0 + (0.5 + _GAUSS_OFFSET) * h, float(sign), axis)
                k = 0.5 * h * (h1 + h2) + 1j * (math.sqrt(3.0) / 12.0) * h * h * (
                    h1 @ h2 - h2 @ h1
                )
            u = expm_hermitian(k) @ u
    return u


def _any_perpendicular(axis: PulseAxis) -> PulseAxis:
    return PulseAxis.X if axis is not PulseAxis.X else PulseAxis.Z


def effective_hamiltonian(
    seq: PulseSequence,
    series: HamiltonianSeries,
    t: float,
    h: float | None = None,
    steps_per_interval: int = 32,
    hermiticity_tol: float = 1e-8,
) -> np.ndarray:
    """Generator i (d/dt U_eff) U_eff^dag of the rescaled primary evolution.

    Central differences with one Richardson extrapolation level; the default
    step is 1e-4 * t.  Raises when the finite-difference step is too large
    for the result to be Hermitian within ``hermiticity_tol``.
    """
    if t <= 0:
        raise ValueError("duration must be positive")
    if h is None:
        h = 1e-4 * t
    if not 0 < h < t:
        raise ValueError("finite-difference step must satisfy 0 < h < t")

    def u_eff(x: float) -> np.ndarray:
        return effective_propagator(seq, series, x, steps_per_interval)

    def central(step: float) -> np.ndarray:
        return (u_eff(t + step) - u_eff(t - step)) / (2.0 * step)

    du = (4.0 * central(0.5 * h) - central(h)) / 3.0
    heff = 1j * du @ u_eff(t).conj().T
    defect = float(np.linalg.norm(heff - heff.conj().T))
    if defect > hermiticity_tol * max(1.0, float(np.linalg.norm(heff))):
        raise ValueError(
            f"finite-difference step too large: hermiticity defect {defect:.3e}"
        )
    return heff
