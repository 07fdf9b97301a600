"""Angle-substituted switching profiles and exact trigonometric chain integrals.

Substituting t = sin^2(theta/2) turns a UDD switching function into a square
wave on [0, pi] with N + 1 equal intervals, whose sine spectrum lives only on
odd multiples of N + 1.  The nested ordered integrals that decide the
suppression theorem then involve products of that profile with sin(q theta)
factors.  Everything here is carried by a closed polynomial-trigonometric
term algebra: coeff * theta^k * {cos,sin}(m theta), which is exact under
multiplication by sines/cosines (product to sum) and under antidifferentiation
(integration by parts; the resonant m = 0 branch raises the theta power).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TrigPolynomial",
    "ThetaProfile",
    "FourierSpectrum",
    "theta_profile",
    "fourier_coefficient",
    "fourier_spectrum",
    "f_coefficient",
    "cos_chain",
    "cos_chain_reduced",
    "MAX_TRIG_CHAIN",
]

MAX_TRIG_CHAIN = 5
_MAX_THETA_POWER = 12

COS = "cos"
SIN = "sin"


def _merge(terms: dict, key: tuple[int, int, str], coeff: float) -> None:
    if coeff == 0.0:
        return
    k, m, kind = key
    if kind == SIN:
        if m == 0:
            return
        if m < 0:
            m, coeff = -m, -coeff
    elif m < 0:
        m = -m
    key = (k, m, kind)
    new = terms.get(key, 0.0) + coeff
    if new == 0.0:
        terms.pop(key, None)
    else:
        terms[key] = new


@dataclass(frozen=True)
class TrigPolynomial:
    """Canonical sum of coeff * theta^k * trig(m theta) terms.

    Terms are stored sorted as ``(k, m, kind, coeff)`` with m >= 0 and no
    (m = 0, sin) entries.  Instances are immutable; all operations return new
    values.
    """

    terms: tuple[tuple[int, int, str, float], ...] = ()

    @classmethod
    def from_terms(cls, items) -> "TrigPolynomial":
        acc: dict = {}
        for k, m, kind, coeff in items:
            _merge(acc, (k, m, kind), coeff)
        return cls(tuple((k, m, kind, c) for (k, m, kind), c in sorted(acc.items())))

    @classmethod
    def one(cls) -> "TrigPolynomial":
        return cls(((0, 0, COS, 1.0),))

    @classmethod
    def constant(cls, value: float) -> "TrigPolynomial":
        return cls.from_terms([(0, 0, COS, float(value))])

    def __add__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        return TrigPolynomial.from_terms(self.terms + other.terms)

    def scaled(self, factor: float) -> "TrigPolynomial":
        return TrigPolynomial.from_terms(
            (k, m, kind, factor * c) for k, m, kind, c in self.terms
        )

    def times_trig(self, kind: str, q: int) -> "TrigPolynomial":
        """Multiply by sin(q theta) or cos(q theta) via product-to-sum."""
        if kind == SIN and q < 0:
            return self.times_trig(SIN, -q).scaled(-1.0)
        q = abs(q)
        if kind == SIN and q == 0:
            return TrigPolynomial()
        if kind == COS and q == 0:
            return self
        out: list = []
        for k, m, tk, c in self.terms:
            h = 0.5 * c
            if tk == COS and kind == COS:
                # cos(m)cos(q) = (cos(m-q) + cos(m+q)) / 2
                out += [(k, m - q, COS, h), (k, m + q, COS, h)]
            elif tk == SIN and kind == COS:
                # sin(m)cos(q) = (sin(m-q) + sin(m+q)) / 2
                out += [(k, m - q, SIN, h), (k, m + q, SIN, h)]
            elif tk == COS and kind == SIN:
                # cos(m)sin(q) = (sin(m+q) - sin(m-q)) / 2
                out += [(k, m + q, SIN, h), (k, m - q, SIN, -h)]
            else:
                # sin(m)sin(q) = (cos(m-q) - cos(m+q)) / 2
                out += [(k, m - q, COS, h), (k, m + q, COS, -h)]
        return TrigPolynomial.from_terms(out)

    def times_theta_power(self, p: int) -> "TrigPolynomial":
        if p == 0:
            return self
        return TrigPolynomial.from_terms(
            (k + p, m, kind, c) for k, m, kind, c in self.terms
        )

    def antiderivative(self) -> "TrigPolynomial":
        """Term-wise indefinite integral (no constant fixed by this method)."""
        out: list = []
        for k, m, kind, c in self.terms:
            out.extend(_antiderivative_term(k, m, kind, c))
        return TrigPolynomial.from_terms(out)

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        total = np.zeros_like(theta)
        for k, m, kind, c in self.terms:
            trig = np.cos(m * theta) if kind == COS else np.sin(m * theta)
            total = total + c * theta**k * trig
        return float(total) if total.ndim == 0 else total

    @property
    def max_theta_power(self) -> int:
        return max((k for k, _, _, _ in self.terms), default=0)

    def is_pure_cosine(self) -> bool:
        """True when every term is a plain cos(m theta), no theta powers."""
        return all(k == 0 and kind == COS for k, _, kind, _ in self.terms)


def _antiderivative_term(k: int, m: int, kind: str, c: float):
    if k > _MAX_THETA_POWER:
        raise ValueError("theta power exceeds integration-by-parts bound")
    if m == 0:
        # resonant branch: plain power rule
        yield (k + 1, 0, COS, c / (k + 1))
        return
    if kind == COS:
        yield (k, m, SIN, c / m)
        if k:
            yield from _antiderivative_term(k - 1, m, SIN, -c * k / m)
    else:
        yield (k, m, COS, -c / m)
        if k:
            yield from _antiderivative_term(k - 1, m, COS, c * k / m)


@dataclass(frozen=True)
class ThetaProfile:
    """Square-wave profile of a UDD switching function in the angle variable.

    ``breakpoints`` are j*pi/(N+1) for j = 1..N; interval j (0-based) carries
    the sign (-1)^j.
    """

    n_pulses: int
    breakpoints: tuple[float, ...]

    @property
    def edges(self) -> tuple[float, ...]:
        return (0.0,) + self.breakpoints + (math.pi,)

    @property
    def signs(self) -> np.ndarray:
        return (-1.0) ** np.arange(self.n_pulses + 1)

    def __call__(self, theta):
        theta = np.asarray(theta)
        idx = np.searchsorted(self.breakpoints, theta, side="right")
        return (-1.0) ** idx


def theta_profile(n: int) -> ThetaProfile:
    """Piecewise-constant profile of the angle-substituted UDD switching function."""
    if n < 0:
        raise ValueError("pulse count must be non-negative")
    return ThetaProfile(n, tuple(j * math.pi / (n + 1) for j in range(1, n + 1)))


def fourier_coefficient(n: int, r: int) -> float:
    """Sine-series coefficient a_r = (2/pi) * integral of profile * sin(r theta).

    Evaluated in closed form from the exact breakpoints; nonzero only when r
    is an odd multiple of n + 1, where it equals the square-wave value
    4 / (r/(n+1) * pi).
    """
    if r < 1:
        raise ValueError("harmonic index must be positive")
    prof = theta_profile(n)
    edges = np.asarray(prof.edges)
    # integral of sin(r theta) over [a, b] is (cos(r a) - cos(r b)) / r
    cos_edges = np.cos(r * edges)
    pieces = (cos_edges[:-1] - cos_edges[1:]) / r
    return float(2.0 / math.pi * np.dot(prof.signs, pieces))


@dataclass(frozen=True)
class FourierSpectrum:
    """Sine spectrum of an angle-substituted UDD profile up to a cutoff."""

    n_pulses: int
    coefficients: dict[int, float]

    def __getitem__(self, r: int) -> float:
        return self.coefficients[r]


def fourier_spectrum(n: int, r_max: int) -> FourierSpectrum:
    return FourierSpectrum(n, {r: fourier_coefficient(n, r) for r in range(1, r_max + 1)})


def _chain_over_profile(prof: ThetaProfile, weights: list[tuple[str, int]]) -> float:
    """Iterated ordered integral of prod_j profile(theta_j) * trig_j(q_j theta_j).

    ``weights`` is innermost-first.  The running integrand is held per segment
    of the profile; each step multiplies by the segment sign and the next trig
    weight, antidifferentiates, and restores continuity across segments.
    """
    edges = prof.edges
    signs = prof.signs
    g = [TrigPolynomial.one() for _ in signs]
    for kind, q in weights:
        new: list[TrigPolynomial] = []
        running = 0.0
        for seg, sign in enumerate(signs):
            integrand = g[seg].scaled(float(sign)).times_trig(kind, q)
            anti = integrand.antiderivative()
            const = running - anti(edges[seg])
            seg_poly = anti + TrigPolynomial.constant(const)
            running = seg_poly(edges[seg + 1])
            new.append(seg_poly)
        g = new
    return float(g[-1](edges[-1]))


def f_coefficient(n: int, q: tuple[int, ...] | list[int]) -> float:
    """Nested ordered integral of prod_j profile(theta_j) sin(q_j theta_j) on [0, pi].

    ``q`` is innermost-first; entries may be negative (sin is odd) or zero
    (the integral is then identically zero).  Exact up to rounding.
    """
    q = tuple(int(x) for x in q)
    if not 1 <= len(q) <= MAX_TRIG_CHAIN:
        raise ValueError("chain too deep")
    if any(abs(x) > 12 for x in q):
        raise ValueError("harmonic weight out of range")
    return _chain_over_profile(theta_profile(n), [(SIN, x) for x in q])


def cos_chain(s: tuple[int, ...] | list[int]) -> float:
    """Nested ordered integral of prod_j cos(s_j theta_j) over [0, pi], innermost-first."""
    s = tuple(int(x) for x in s)
    if not 1 <= len(s) <= MAX_TRIG_CHAIN:
        raise ValueError("chain too deep")
    g = TrigPolynomial.one()
    for x in s:
        integrand = g.times_trig(COS, x)
        anti = integrand.antiderivative()
        g = anti + TrigPolynomial.constant(-anti(0.0))
    return float(g(math.pi))


def cos_chain_reduced(s: tuple[int, ...] | list[int]) -> float:
    """Evaluate a cosine chain by collapsing its two innermost integrations.

    The double integral of cos(s1 v) cos(s2 u) over 0 <= v <= u <= theta is a
    plain cosine combination whenever no secular theta terms arise; absorbing
    it into the third factor rewrites the chain as a weighted sum of chains
    two links shorter.  Raises if a resonance produces secular terms so the
    reduction would leave the cosine family.
    """
    s = tuple(int(x) for x in s)
    if len(s) < 3:
        raise ValueError("reduction needs at least three links")
    inner = TrigPolynomial.one().times_trig(COS, s[0]).antiderivative()
    inner = inner + TrigPolynomial.constant(-inner(0.0))
    double = inner.times_trig(COS, s[1]).antiderivative()
    double = double + TrigPolynomial.constant(-double(0.0))
    if not double.is_pure_cosine():
        raise ValueError("resonant chain: inner double integral is not a cosine sum")
    total = 0.0
    for _, m, _, c in double.terms:
        for combined in (m + s[2], m - s[2]):
            total += 0.5 * c * cos_chain((abs(combined),) + s[3:])
    return total
