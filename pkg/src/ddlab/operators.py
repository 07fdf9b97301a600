"""Qubit (x) bath operator algebra: Hamiltonian series, Magnus terms, commutator identities.

Operators are plain complex ndarrays on the tensor-product space with the
qubit factor first, so a coupling sigma_i * A_i is ``np.kron(sigma_i, A_i)``.
A :class:`HamiltonianSeries` stores matrix-valued Taylor coefficients of the
bath Hamiltonian and of the three coupling operators; the static (degree-0)
parts feed the Magnus machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .piecewise import i1, i31, i32, j2
from .sequence import PulseAxis, SwitchingFunction

__all__ = [
    "SIGMA",
    "SIGMA_BY_AXIS",
    "commutator",
    "anticommutator",
    "expm_hermitian",
    "is_hermitian",
    "unitarity_defect",
    "operator_to_json",
    "operator_from_json",
    "HamiltonianSeries",
    "random_hamiltonian",
    "MagnusTerms",
    "eta2",
    "d1_eta2_commutator",
    "magnus_terms",
    "switched_propagator",
]

_ID2 = np.eye(2, dtype=complex)
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)

SIGMA = {"i": _ID2, "x": _SX, "y": _SY, "z": _SZ}
SIGMA_BY_AXIS = {PulseAxis.X: _SX, PulseAxis.Y: _SY, PulseAxis.Z: _SZ}


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def expm_hermitian(k: np.ndarray) -> np.ndarray:
    """exp(-i k) for Hermitian k, via eigendecomposition (unitary by construction)."""
    w, v = np.linalg.eigh(k)
    return (v * np.exp(-1j * w)) @ v.conj().T


def is_hermitian(a: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.linalg.norm(a - a.conj().T) <= tol * max(1.0, np.linalg.norm(a)))


def unitarity_defect(u: np.ndarray) -> float:
    """Frobenius norm of U^dag U - 1."""
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])))


def operator_to_json(a: np.ndarray) -> list:
    """Row-major nested lists of [re, im] pairs."""
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(a, dtype=complex)]


def operator_from_json(data: list) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HamiltonianSeries:
    """Matrix Taylor coefficients of a time-dependent qubit-bath Hamiltonian.

    Each field has shape (degree + 1, d, d) with Hermitian slices; the full
    operator at time t is

        1 (x) h_bath(t) + sum_i sigma_i (x) a_i(t),   a_i(t) = sum_p a_i[p] t^p.
    """

    h_bath: np.ndarray
    a_x: np.ndarray
    a_y: np.ndarray
    a_z: np.ndarray

    def __post_init__(self):
        shapes = {m.shape for m in (self.h_bath, self.a_x, self.a_y, self.a_z)}
        if len(shapes) != 1:
            raise ValueError("all coefficient stacks must share one shape")
        (p1, d, d2) = self.h_bath.shape
        if d != d2 or p1 < 1:
            raise ValueError("coefficients must be stacks of square matrices")
        for name in ("h_bath", "a_x", "a_y", "a_z"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))

    @property
    def bath_dim(self) -> int:
        return self.h_bath.shape[1]

    @property
    def degree(self) -> int:
        return self.h_bath.shape[0] - 1

    @property
    def dim(self) -> int:
        return 2 * self.bath_dim

    def _eval(self, stack: np.ndarray, t: float) -> np.ndarray:
        acc = np.zeros_like(stack[0])
        for coeff in stack[::-1]:
            acc = acc * t + coeff
        return acc

    def bath(self, t: float) -> np.ndarray:
        return self._eval(self.h_bath, t)

    def coupling(self, axis: str, t: float) -> np.ndarray:
        return self._eval(getattr(self, f"a_{axis}"), t)

    def full(self, t: float) -> np.ndarray:
        """Lab-frame Hamiltonian at time t on the 2d-dimensional product space."""
        h = np.kron(_ID2, self.bath(t))
        for axis, sigma in (("x", _SX), ("y", _SY), ("z", _SZ)):
            h = h + np.kron(sigma, self.coupling(axis, t))
        return h

    def toggled(self, t: float, sign: float, pulse_axis: PulseAxis) -> np.ndarray:
        """Toggling-frame Hamiltonian: couplings perpendicular to the pulse axis carry ``sign``."""
        h = np.kron(_ID2, self.bath(t))
        for axis, sigma in (("x", _SX), ("y", _SY), ("z", _SZ)):
            s = 1.0 if axis == pulse_axis.value.lower() else sign
            h = h + s * np.kron(sigma, self.coupling(axis, t))
        return h

    def d0(self) -> np.ndarray:
        """Static dephasing block 1 (x) H_b + sigma_z (x) A_z of the degree-0 coefficients."""
        return np.kron(_ID2, self.h_bath[0]) + np.kron(_SZ, self.a_z[0])

    def d1(self) -> np.ndarray:
        """Static transverse block sigma_x (x) A_x + sigma_y (x) A_y."""
        return np.kron(_SX, self.a_x[0]) + np.kron(_SY, self.a_y[0])


def _random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = 0.5 * (g + g.conj().T)
    return h / np.linalg.norm(h, 2)


def random_hamiltonian(
    d: int,
    degree: int,
    seed: int,
    bath_strength: float = 1.0,
    coupling_strength: float = 0.5,
    axes: tuple[str, ...] = ("x", "y", "z"),
) -> HamiltonianSeries:
    """Seeded random Hermitian coefficient stacks, unit spectral norm before scaling.

    The static bath coefficient is scaled by ``bath_strength``, every other
    coefficient by ``coupling_strength``.  All stacks are always drawn in a
    fixed order, then couplings not listed in ``axes`` are zeroed, so the
    surviving matrices do not depend on which axes are enabled.  Single
    sequential generator, hence identical output for identical seeds no
    matter how many worker threads the caller uses.
    """
    if d < 2:
        raise ValueError("bath dimension must be at least 2")
    if d > 16:
        raise ValueError("bath dimension capped at 16 (dense algebra)")
    if degree < 0:
        raise ValueError("Taylor degree must be non-negative")
    rng = np.random.default_rng(seed)
    stacks = {}
    for name in ("h_bath", "a_x", "a_y", "a_z"):
        mats = []
        for p in range(degree + 1):
            strength = bath_strength if (name == "h_bath" and p == 0) else coupling_strength
            mats.append(strength * _random_hermitian(rng, d))
        stacks[name] = np.stack(mats)
    for axis in ("x", "y", "z"):
        if axis not in axes:
            stacks[f"a_{axis}"] = np.zeros_like(stacks[f"a_{axis}"])
    return HamiltonianSeries(**stacks)


@dataclass(frozen=True)
class MagnusTerms:
    """First three Magnus terms of the switched evolution plus their integrals.

    ``integrals`` holds I1, J2, I31, I32 in physical units (duration powers
    1, 2, 3, 3).  h1/h2/h3 are Hermitian; the propagator approximation is
    exp(-i T (h1 + h2 + h3)) with remainder O(T^4).
    """

    h1: np.ndarray
    h2: np.ndarray
    h3: np.ndarray
    integrals: dict[str, float] = field(default_factory=dict)

    @property
    def total(self) -> np.ndarray:
        return self.h1 + self.h2 + self.h3


def eta2(series: HamiltonianSeries) -> np.ndarray:
    """Second-order dephasing generator of the static (degree-0) Hamiltonian.

    sum over i in {x, y} of sigma_i (x) ([H_b, A_i] - i eps_{z i j} {A_z, A_j})
    with the cyclic convention eps_{zxy} = +1.  Equals the commutator of the
    static dephasing and transverse blocks, which is the convention-free way
    to pin the sign; it is anti-Hermitian, so Magnus terms built from it carry
    explicit factors of i.
    """
    hb, ax, ay, az = series.h_bath[0], series.a_x[0], series.a_y[0], series.a_z[0]
    ex = commutator(hb, ax) - 1j * anticommutator(az, ay)
    ey = commutator(hb, ay) + 1j * anticommutator(az, ax)
    return np.kron(_SX, ex) + np.kron(_SY, ey)


def d1_eta2_commutator(series: HamiltonianSeries) -> np.ndarray:
    """Explicit commutator of the transverse block with the dephasing generator.

    Returns the expanded form: a bath-identity part that shifts the bath
    dynamics and a sigma_z part that corrects dephasing,

        1 (x) ( sum_i [A_i, [H_b, A_i]] - i([A_x,{A_z,A_y}] - [A_y,{A_z,A_x}]) )
      + i sigma_z (x) ( {A_x,[H_b,A_y]} - {A_y,[H_b,A_x]}
                        + i({A_x,{A_z,A_x}} + {A_y,{A_z,A_y}}) ).
    """
    hb, ax, ay, az = series.h_bath[0], series.a_x[0], series.a_y[0], series.a_z[0]
    bath_part = (
        commutator(ax, commutator(hb, ax))
        + commutator(ay, commutator(hb, ay))
        - 1j * commutator(ax, anticommutator(az, ay))
        + 1j * commutator(ay, anticommutator(az, ax))
    )
    z_part = (
        anticommutator(ax, commutator(hb, ay))
        - anticommutator(ay, commutator(hb, ax))
        + 1j * anticommutator(ax, anticommutator(az, ax))
        + 1j * anticommutator(ay, anticommutator(az, ay))
    )
    return np.kron(_ID2, bath_part) + 1j * np.kron(_SZ, z_part)


def magnus_terms(series: HamiltonianSeries, f: SwitchingFunction, t_p: float) -> MagnusTerms:
    """Magnus terms of the switched static Hamiltonian D0 + D1 F(t) over duration t_p.

    h1 = D0 + (I1/t_p) D1,
    h2 = -i (J2 / (2 t_p)) eta2,
    h3 = -(1/(6 t_p)) (I31 [D0, eta2] + I32 [D1, eta2]).

    The -i on h2 makes it Hermitian (eta2 is anti-Hermitian) and is fixed by
    the O(t_p^4) remainder of exp(-i t_p (h1+h2+h3)) against the exact
    switched propagator.
    """
    if t_p <= 0:
        raise ValueError("duration must be positive")
    c1, c2, c31, c32 = i1(f), j2(f), i31(f), i32(f)
    integrals = {
        "I1": c1 * t_p,
        "J2": c2 * t_p**2,
        "I31": c31 * t_p**3,
        "I32": c32 * t_p**3,
    }
    d0 = series.d0()
    d1 = series.d1()
    eta = eta2(series)
    h1 = d0 + (integrals["I1"] / t_p) * d1
    h2 = -1j * (integrals["J2"] / (2.0 * t_p)) * eta
    h3 = -(1.0 / (6.0 * t_p)) * (
        integrals["I31"] * commutator(d0, eta) + integrals["I32"] * commutator(d1, eta)
    )
    return MagnusTerms(h1, h2, h3, integrals)


def switched_propagator(
    d0: np.ndarray, d1: np.ndarray, f: SwitchingFunction, t_p: float
) -> np.ndarray:
    """Exact propagator of the piecewise-constant Hamiltonian D0 + D1 F(t).

    Later intervals multiply from the left.  Exact because each interval uses
    a single Hermitian eigendecomposition, no time stepping.
    """
    edges = np.concatenate(([0.0], np.asarray(f.breakpoints), [1.0])) * t_p
    u = np.eye(d0.shape[0], dtype=complex)
    for (a, b), sign in zip(zip(edges, edges[1:]), f.signs):
        u = expm_hermitian((b - a) * (d0 + sign * d1)) @ u
    return u
