"""Exact piecewise-polynomial algebra on [0, 1] and ordered nested integrals.

Every integrand appearing in the vanishing theorems is a product of
polynomials in the global relative time and of a piecewise-constant switching
function, so all nested ordered integrals over the simplex
0 <= t_1 <= ... <= t_n <= 1 close under one operation: multiply, then take the
continuous antiderivative.  The only numerical error is double rounding of
the segment arithmetic; degrees stay small, so values claimed to vanish do so
to ~1e-13.

Chains are described innermost-first: ``factors[j] = (power, f_exponent)``
means the j-th integration variable carries t^power * F(t)^f_exponent, with
j = 0 the innermost variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sequence import SwitchingFunction

__all__ = [
    "PiecewisePolynomial",
    "OrderedIntegralSpec",
    "antiderivative",
    "ordered_chain",
    "ordered_coefficient",
    "i1",
    "j2",
    "i31",
    "i32",
    "mc_oracle",
    "MAX_CHAIN_LENGTH",
    "MAX_POWER",
]

MAX_CHAIN_LENGTH = 6
MAX_POWER = 12


def _polyval(coeffs: tuple[float, ...], t: float) -> float:
    """Horner evaluation, ascending coefficient order."""
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Polynomial segments on a partition of [0, 1], in the global variable.

    ``breakpoints`` includes both endpoints; segment i covers
    [breakpoints[i], breakpoints[i+1]) and holds ascending-power coefficients
    ``coeffs[i]``.
    """

    breakpoints: tuple[float, ...]
    coeffs: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if len(self.breakpoints) < 2 or self.breakpoints[0] != 0.0 or self.breakpoints[-1] != 1.0:
            raise ValueError("breakpoints must run from 0.0 to 1.0")
        if any(b >= c for b, c in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if len(self.coeffs) != len(self.breakpoints) - 1:
            raise ValueError("one coefficient tuple per segment required")

    @classmethod
    def constant(cls, value: float = 1.0) -> "PiecewisePolynomial":
        return cls((0.0, 1.0), ((float(value),),))

    @classmethod
    def monomial(cls, power: int) -> "PiecewisePolynomial":
        return cls((0.0, 1.0), ((0.0,) * power + (1.0,),))

    @classmethod
    def from_switching(cls, f: SwitchingFunction) -> "PiecewisePolynomial":
        bps = (0.0,) + tuple(f.breakpoints) + (1.0,)
        return cls(bps, tuple((float(s),) for s in f.signs))

    def segment_index(self, t: float) -> int:
        i = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return min(max(i, 0), len(self.coeffs) - 1)

    def __call__(self, t):
        if np.ndim(t) == 0:
            return _polyval(self.coeffs[self.segment_index(float(t))], float(t))
        t = np.asarray(t, dtype=float)
        return np.array([_polyval(self.coeffs[self.segment_index(x)], x) for x in t])

    def refined(self, breakpoints: tuple[float, ...]) -> "PiecewisePolynomial":
        """Re-segment onto a finer partition (global coefficients are reused)."""
        coeffs = tuple(self.coeffs[self.segment_index(a)] for a in breakpoints[:-1])
        return PiecewisePolynomial(breakpoints, coeffs)

    def __mul__(self, other: "PiecewisePolynomial") -> "PiecewisePolynomial":
        bps = tuple(sorted(set(self.breakpoints) | set(other.breakpoints)))
        a = self.refined(bps)
        b = other.refined(bps)
        prod = tuple(
            tuple(np.convolve(np.asarray(ca), np.asarray(cb)))
            for ca, cb in zip(a.coeffs, b.coeffs)
        )
        return PiecewisePolynomial(bps, prod)

    def scaled(self, factor: float) -> "PiecewisePolynomial":
        return PiecewisePolynomial(
            self.breakpoints, tuple(tuple(factor * c for c in cs) for cs in self.coeffs)
        )

    def antiderivative(self) -> "PiecewisePolynomial":
        """The continuous antiderivative G with G(0) = 0."""
        out = []
        running = 0.0
        for (a, b), cs in zip(zip(self.breakpoints, self.breakpoints[1:]), self.coeffs):
            raw = (0.0,) + tuple(c / (k + 1) for k, c in enumerate(cs))
            const = running - _polyval(raw, a)
            seg = (raw[0] + const,) + raw[1:]
            running = _polyval(seg, b)
            out.append(seg)
        return PiecewisePolynomial(self.breakpoints, tuple(out))

    def integral(self) -> float:
        """Exact integral over [0, 1]."""
        return float(self.antiderivative()(1.0))


def antiderivative(pp: PiecewisePolynomial) -> PiecewisePolynomial:
    """Continuous antiderivative with value 0 at the left endpoint."""
    return pp.antiderivative()


@dataclass(frozen=True)
class OrderedIntegralSpec:
    """One nested ordered integral: powers[j] is the t-power of variable j.

    Variables are listed innermost-first and each carries one switching-function
    factor; the total order of the matching propagator term is
    ``len(powers) + sum(powers)``.
    """

    powers: tuple[int, ...]
    switching: SwitchingFunction

    @property
    def chain_length(self) -> int:
        return len(self.powers)

    @property
    def total_order(self) -> int:
        return len(self.powers) + sum(self.powers)


def ordered_chain(
    f: SwitchingFunction, factors: tuple[tuple[int, int], ...]
) -> float:
    """Nested ordered integral of prod_j F(t_j)^{e_j} t_j^{p_j} over the simplex.

    ``factors`` is innermost-first with entries (power, f_exponent).  There is
    no shortcut for f_exponent = 2: the square is multiplied out literally,
    which is what makes the F^2 = 1 reduction a testable property rather than
    an assumption.
    """
    n = len(factors)
    if n < 1 or n > MAX_CHAIN_LENGTH or any(p > MAX_POWER or p < 0 for p, _ in factors):
        raise ValueError("chain too deep")
    fpoly = PiecewisePolynomial.from_switching(f)
    g = PiecewisePolynomial.constant(1.0)
    for power, f_exp in factors:
        for _ in range(f_exp):
            g = g * fpoly
        if power:
            g = g * PiecewisePolynomial.monomial(power)
        g = g.antiderivative()
    return float(g(1.0))


def ordered_coefficient(spec: OrderedIntegralSpec) -> float:
    """Exact value of the ordered integral with one F factor per variable."""
    return ordered_chain(spec.switching, tuple((p, 1) for p in spec.powers))


def i1(f: SwitchingFunction) -> float:
    """First-order switching integral, in units of the sequence duration."""
    return ordered_chain(f, ((0, 1),))


def j2(f: SwitchingFunction) -> float:
    """Double ordered integral of F(inner) - F(outer), in duration^2 units.

    This multiplies the commutator operator of the second Magnus term; for a
    balanced sequence it reduces to a combination of first-order weighted
    integrals and vanishes whenever two or more UDD pulses are present.
    """
    return ordered_chain(f, ((0, 1), (0, 0))) - ordered_chain(f, ((0, 0), (0, 1)))


def i31(f: SwitchingFunction) -> float:
    """Triple ordered integral linear in F, in duration^3 units.

    Integrand F(t_inner) + F(t_outer) - 2 F(t_mid) over the ordered simplex.
    """
    return (
        ordered_chain(f, ((0, 1), (0, 0), (0, 0)))
        + ordered_chain(f, ((0, 0), (0, 0), (0, 1)))
        - 2.0 * ordered_chain(f, ((0, 0), (0, 1), (0, 0)))
    )


def i32(f: SwitchingFunction) -> float:
    """Triple ordered integral quadratic in F, in duration^3 units.

    Integrand 2 F(t_inner) F(t_outer) - F(t_mid) (F(t_inner) + F(t_outer)).
    Unlike the linear chains this is not covered by the vanishing theorem and
    stays finite for every UDD order.
    """
    return (
        2.0 * ordered_chain(f, ((0, 1), (0, 0), (0, 1)))
        - ordered_chain(f, ((0, 1), (0, 1), (0, 0)))
        - ordered_chain(f, ((0, 0), (0, 1), (0, 1)))
    )


_NAMED_INTEGRANDS = {
    # name -> (chain length, integrand on sorted columns (t_inner, ..., t_outer))
    "i1": (1, lambda fv: fv[:, 0]),
    "j2": (2, lambda fv: fv[:, 0] - fv[:, 1]),
    "i31": (3, lambda fv: fv[:, 0] + fv[:, 2] - 2.0 * fv[:, 1]),
    "i32": (3, lambda fv: 2.0 * fv[:, 0] * fv[:, 2] - fv[:, 1] * (fv[:, 0] + fv[:, 2])),
}

_MC_BLOCK = 1 << 18


def mc_oracle(
    spec: OrderedIntegralSpec | tuple[str, SwitchingFunction],
    samples: int,
    seed: int,
) -> tuple[float, float]:
    """Monte-Carlo estimate of an ordered integral by sorted uniform sampling.

    Accepts either an :class:`OrderedIntegralSpec` or ``(name, switching)``
    with name one of ``i1 / j2 / i31 / i32``.  Sorting n uniform draws yields
    a uniform point of the ordered simplex of volume 1/n!, so the estimate is
    mean(integrand) / n!.  Deterministic for a given seed; draws are consumed
    in fixed-size blocks so the result does not depend on free memory.

    Returns
    -------
    (estimate, standard_error)
    """
    if samples < 10_000:
        raise ValueError("samples must be at least 10^4")
    if isinstance(spec, OrderedIntegralSpec):
        n = spec.chain_length
        switching = spec.switching
        powers = np.asarray(spec.powers, dtype=float)

        def integrand(ts):
            return np.prod(switching(ts) * ts**powers, axis=1)

    else:
        name, switching = spec
        try:
            n, named = _NAMED_INTEGRANDS[name.lower().replace(",", "").replace("_", "")]
        except KeyError:
            raise ValueError(f"unknown integral name {name!r}") from None

        def integrand(ts):
            return named(switching(ts))

    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        m = min(_MC_BLOCK, samples - done)
        ts = rng.random((m, n))
        ts.sort(axis=1)
        vals = integrand(ts)
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += m
    scale = 1.0 / math.factorial(n)
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    stderr = scale * math.sqrt(var / samples)
    return scale * mean, stderr
