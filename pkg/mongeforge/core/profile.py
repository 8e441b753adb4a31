"""One-dimensional profile algebra for conical and cylindrical pieces.

A conical piece ``u0 + ρ α(θ)`` has Hessian ``κ(θ)/ρ · e_θ⊗e_θ`` with ``κ = α'' + α``; a
cylindrical piece ``α(x) + v0 y`` has Hessian ``κ(x) e_1⊗e_1`` with ``κ = α''``. Curvature
densities are finite trigonometric or polynomial series, so every profile below is evaluated in
closed form.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.polynomial import Polynomial
from scipy.linalg import null_space

from ..utils.logging import get_logger

logger = get_logger(__name__)

TWO_PI = 2.0 * math.pi
RESONANCE_TOL = 1e-12
FREDHOLM_TOL = 1e-12
MOMENT_TOL = 1e-12
ENDPOINT_TOL = 1e-10
# Singular values below this count as zero when assembling the moment nullspace.
NULL_TOL = 1e-13


class ProfileError(Exception):
    """Base exception for profile errors."""


class OutOfRange(ProfileError):
    """Evaluation outside the profile's angular or linear range."""


class Unsolvable(ProfileError):
    """κ has a first harmonic, so no 2π-periodic profile exists."""


class Infeasible(ProfileError):
    """The moment system has no solution for the requested target."""


class TrivialOnly(ProfileError):
    """The homogeneous moment system admits only κ = 0."""


class Kind(str, Enum):
    CONE = "cone"
    CYL = "cyl"


@dataclass(frozen=True)
class TrigTerm:
    """``a cos ω(θ−θ0) + b sin ω(θ−θ0)``."""

    freq: float
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self) -> None:
        if not (self.freq >= 0 and math.isfinite(self.freq)):
            raise ProfileError(f"Frequency must be finite and non-negative, got {self.freq}")
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ProfileError(f"Non-finite coefficients in term {self}")

    @property
    def resonant(self) -> bool:
        return abs(self.freq - 1.0) <= RESONANCE_TOL


@dataclass(frozen=True)
class TrigSeries:
    """κ(θ) = Σ a_k cos ω_k(θ−origin) + b_k sin ω_k(θ−origin), frequencies distinct."""

    terms: tuple[TrigTerm, ...] = ()
    origin: float = 0.0

    def __post_init__(self) -> None:
        freqs = [t.freq for t in self.terms]
        if len(set(freqs)) != len(freqs):
            raise ProfileError(f"Duplicate frequencies in {freqs}")
        for t in self.terms:
            if not t.resonant and abs(1.0 - t.freq**2) < 1e-6:
                logger.warning(f"Near-resonant frequency {t.freq}; profile is ill-conditioned")

    @classmethod
    def of(cls, *terms: tuple[float, float, float], origin: float = 0.0) -> "TrigSeries":
        """Build from ``(freq, a, b)`` triples."""
        return cls(tuple(TrigTerm(*t) for t in terms), origin)

    @classmethod
    def constant(cls, value: float) -> "TrigSeries":
        return cls((TrigTerm(0.0, value, 0.0),))

    def is_zero(self) -> bool:
        return all(t.a == 0.0 and (t.b == 0.0 or t.freq == 0.0) for t in self.terms)

    def __call__(self, theta: float | np.ndarray) -> np.ndarray:
        phi = np.asarray(theta, dtype=float) - self.origin
        out = np.zeros_like(phi)
        for t in self.terms:
            out = out + t.a * np.cos(t.freq * phi) + t.b * np.sin(t.freq * phi)
        return out

    def particular(self, theta: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """A particular solution ``P`` of ``P'' + P = κ`` and its derivative."""
        phi = np.asarray(theta, dtype=float) - self.origin
        P = np.zeros_like(phi)
        dP = np.zeros_like(phi)
        for t in self.terms:
            if t.freq == 0.0:
                P = P + t.a
            elif t.resonant:
                s, c = np.sin(phi), np.cos(phi)
                # cos φ -> (φ/2) sin φ ; sin φ -> -(φ/2) cos φ
                P = P + t.a * 0.5 * phi * s - t.b * 0.5 * phi * c
                dP = dP + t.a * 0.5 * (s + phi * c) - t.b * 0.5 * (c - phi * s)
            else:
                w = t.freq
                s, c = np.sin(w * phi), np.cos(w * phi)
                k = 1.0 / (1.0 - w * w)
                P = P + k * (t.a * c + t.b * s)
                dP = dP + k * w * (-t.a * s + t.b * c)
        return P, dP

    def rebased(self, origin: float) -> "TrigSeries":
        """Same function written about a different angular origin."""
        if origin == self.origin:
            return self
        terms = []
        for t in self.terms:
            delta = t.freq * (origin - self.origin)
            cd, sd = math.cos(delta), math.sin(delta)
            terms.append(TrigTerm(t.freq, t.a * cd + t.b * sd, -t.a * sd + t.b * cd))
        return TrigSeries(tuple(terms), origin)

    def scaled(self, factor: float) -> "TrigSeries":
        return TrigSeries(
            tuple(TrigTerm(t.freq, factor * t.a, factor * t.b) for t in self.terms), self.origin
        )

    def __add__(self, other: "TrigSeries") -> "TrigSeries":
        other = other.rebased(self.origin)
        merged: dict[float, list[float]] = {t.freq: [t.a, t.b] for t in self.terms}
        for t in other.terms:
            ab = merged.setdefault(t.freq, [0.0, 0.0])
            ab[0] += t.a
            ab[1] += t.b
        return TrigSeries(
            tuple(TrigTerm(f, a, b) for f, (a, b) in sorted(merged.items())), self.origin
        )

    def first_harmonic(self) -> tuple[float, float]:
        """``(∫ κ cos θ, ∫ κ sin θ)`` over one period (integer frequencies)."""
        ic = is_ = 0.0
        for t in self.terms:
            if t.resonant:
                c0, s0 = math.cos(self.origin), math.sin(self.origin)
                ic += math.pi * (t.a * c0 - t.b * s0)
                is_ += math.pi * (t.a * s0 + t.b * c0)
        return ic, is_

    def has_integer_frequencies(self) -> bool:
        return all(abs(t.freq - round(t.freq)) <= RESONANCE_TOL for t in self.terms)


@dataclass(frozen=True)
class PolySeries:
    """κ(x) = Σ c_j (x − origin)^j."""

    coeffs: tuple[float, ...] = ()
    origin: float = 0.0

    def __post_init__(self) -> None:
        if not all(math.isfinite(c) for c in self.coeffs):
            raise ProfileError(f"Non-finite polynomial coefficients {self.coeffs}")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @property
    def poly(self) -> Polynomial:
        return Polynomial(self.coeffs if self.coeffs else (0.0,))

    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coeffs)

    def __call__(self, x: float | np.ndarray) -> np.ndarray:
        return np.asarray(self.poly(np.asarray(x, dtype=float) - self.origin), dtype=float)

    def rebased(self, origin: float) -> "PolySeries":
        if origin == self.origin:
            return self
        shifted = self.poly(Polynomial([origin - self.origin, 1.0]))
        return PolySeries(tuple(shifted.coef), origin)

    def scaled(self, factor: float) -> "PolySeries":
        return PolySeries(tuple(factor * c for c in self.coeffs), self.origin)

    def __add__(self, other: "PolySeries") -> "PolySeries":
        other = other.rebased(self.origin)
        return PolySeries(tuple((self.poly + other.poly).coef), self.origin)

    def double_integral(self, anchor: float) -> Polynomial:
        """``Q`` in the offset variable with ``Q = Q' = 0`` at ``anchor`` and ``Q'' = κ``."""
        return self.poly.integ(2, lbnd=anchor - self.origin)


Series = TrigSeries | PolySeries


@dataclass(frozen=True)
class AffineData:
    """Affine function ``g·p + c``."""

    g: tuple[float, float] = (0.0, 0.0)
    c: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "g", (float(self.g[0]), float(self.g[1])))
        object.__setattr__(self, "c", float(self.c))

    @property
    def gradient(self) -> np.ndarray:
        return np.array(self.g)

    def __call__(self, p: np.ndarray | Sequence[float]) -> np.ndarray:
        return np.asarray(p, dtype=float) @ self.gradient + self.c

    def __add__(self, other: "AffineData") -> "AffineData":
        return AffineData((self.g[0] + other.g[0], self.g[1] + other.g[1]), self.c + other.c)

    def close_to(self, other: "AffineData", tol: float) -> bool:
        return (
            abs(self.g[0] - other.g[0]) <= tol
            and abs(self.g[1] - other.g[1]) <= tol
            and abs(self.c - other.c) <= tol
        )


@dataclass(frozen=True)
class ConeProfile:
    """Solution of ``α'' + α = κ`` from initial data at ``theta_b``.

    ``theta_f is None`` marks a 2π-periodic profile; those are stored with ``theta_b = 0``.
    """

    theta_b: float
    theta_f: float | None
    alpha_b: float
    dalpha_b: float
    kappa: TrigSeries = field(default_factory=TrigSeries)

    def __post_init__(self) -> None:
        if self.theta_f is None:
            ic, is_ = self.kappa.first_harmonic()
            if not self.kappa.has_integer_frequencies() or max(abs(ic), abs(is_)) > FREDHOLM_TOL:
                raise Unsolvable("Periodic profile needs integer frequencies and no first harmonic")
        elif not (0 < self.theta_f - self.theta_b <= TWO_PI + 1e-12):
            raise ProfileError(
                f"Profile range ({self.theta_b}, {self.theta_f}) must have width in (0, 2π]"
            )

    @property
    def periodic(self) -> bool:
        return self.theta_f is None

    @property
    def width(self) -> float:
        return TWO_PI if self.theta_f is None else self.theta_f - self.theta_b

    def with_initial(self, alpha_b: float, dalpha_b: float) -> "ConeProfile":
        return ConeProfile(self.theta_b, self.theta_f, alpha_b, dalpha_b, self.kappa)


@dataclass(frozen=True)
class CylProfile:
    """Solution of ``α'' = κ`` anchored at ``x_b``; ``x_f is None`` means the whole line."""

    x_b: float
    x_f: float | None
    alpha_b: float
    dalpha_b: float
    kappa: PolySeries = field(default_factory=PolySeries)

    def __post_init__(self) -> None:
        if self.x_f is not None and (math.isnan(self.x_f) or self.x_f == self.x_b):
            raise ProfileError(f"Degenerate cylinder range ({self.x_b}, {self.x_f})")

    @property
    def whole_line(self) -> bool:
        return self.x_f is None

    def contains(self, x: np.ndarray, tol: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.x_f is None:
            return np.ones_like(x, dtype=bool)
        lo, hi = sorted((self.x_b, self.x_f))
        return (x >= lo - tol) & (x <= hi + tol)

    def with_initial(self, alpha_b: float, dalpha_b: float) -> "CylProfile":
        return CylProfile(self.x_b, self.x_f, alpha_b, dalpha_b, self.kappa)


def _range_tol(value: float) -> float:
    return 1e-9 * (1.0 + abs(value))


def cone_alpha_eval(
    prof: ConeProfile, theta: float | np.ndarray, check: bool = True
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form ``(α, α', α'')`` at ``theta``.

    Raises:
        OutOfRange: If ``theta`` lies outside ``[theta_b, theta_f]`` of a non-periodic profile.
    """
    theta = np.asarray(theta, dtype=float)
    if check and prof.theta_f is not None:
        lo = prof.theta_b - _range_tol(prof.theta_b)
        hi = prof.theta_f + _range_tol(prof.theta_f)
        if np.any((theta < lo) | (theta > hi)):
            raise OutOfRange(f"θ outside [{prof.theta_b}, {prof.theta_f}]")
    c, s = np.cos(theta - prof.theta_b), np.sin(theta - prof.theta_b)
    P, dP = prof.kappa.particular(theta)
    Pb, dPb = prof.kappa.particular(prof.theta_b)
    alpha = prof.alpha_b * c + prof.dalpha_b * s + P - Pb * c - dPb * s
    dalpha = -prof.alpha_b * s + prof.dalpha_b * c + dP + Pb * s - dPb * c
    return alpha, dalpha, prof.kappa(theta) - alpha


def cyl_alpha_eval(
    prof: CylProfile, x: float | np.ndarray, check: bool = True
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form ``(α, α', α'')`` at ``x``."""
    x = np.asarray(x, dtype=float)
    tol = 1e-9 * (1.0 + abs(prof.x_b) + float(np.max(np.abs(x), initial=0.0)))
    if check and not np.all(prof.contains(x, tol)):
        raise OutOfRange(f"x outside the profile range ({prof.x_b}, {prof.x_f})")
    Q = prof.kappa.double_integral(prof.x_b)
    t = x - prof.kappa.origin
    alpha = prof.alpha_b + prof.dalpha_b * (x - prof.x_b) + Q(t)
    dalpha = prof.dalpha_b + Q.deriv()(t)
    return np.asarray(alpha), np.asarray(dalpha), prof.kappa(x)


def moment_defect(kind: Kind, kappa: Series, a: float, b: float) -> tuple[float, float]:
    """Value/derivative excess over the homogeneous solution accumulated across ``[a, b]``.

    CONE: ``(∫ sin(b−s) κ, ∫ cos(b−s) κ)``; CYL: ``(∫ (b−s) κ, ∫ κ)``.
    """
    if kind is Kind.CONE:
        if not isinstance(kappa, TrigSeries):
            raise ProfileError("Cone moments need a TrigSeries")
        P, dP = kappa.particular(np.array([a, b]))
        c, s = math.cos(b - a), math.sin(b - a)
        m_val = P[1] - P[0] * c - dP[0] * s
        m_der = dP[1] + P[0] * s - dP[0] * c
        return float(m_val), float(m_der)
    if not isinstance(kappa, PolySeries):
        raise ProfileError("Cylinder moments need a PolySeries")
    Q = kappa.double_integral(a)
    t = b - kappa.origin
    return float(Q(t)), float(Q.deriv()(t))


def combine(basis: Sequence[Series], coeffs: Sequence[float] | np.ndarray) -> Series:
    """``Σ c_j basis_j`` as a single series."""
    if not basis:
        raise ProfileError("Empty basis")
    total = basis[0].scaled(float(coeffs[0]))
    for element, coeff in zip(basis[1:], coeffs[1:], strict=True):
        total = total + element.scaled(float(coeff))  # type: ignore[operator]
    return total


def moment_matrix(kind: Kind, basis: Sequence[Series], a: float, b: float) -> np.ndarray:
    return np.array([moment_defect(kind, k, a, b) for k in basis], dtype=float).T.reshape(2, -1)


def solve_kappa(
    kind: Kind,
    basis: Sequence[Series],
    a: float,
    b: float,
    target: tuple[float, float] = (0.0, 0.0),
    endpoint_zero: bool = True,
) -> np.ndarray:
    """Coefficients ``c`` with ``moment_defect(Σ c_j basis_j) = target``.

    A zero target returns the normalized projection of the all-ones vector onto the nullspace,
    sign-fixed so the first nonzero entry is positive. Every unit null vector has the same norm,
    so this is a fixed deterministic pick rather than a norm minimiser; it falls back to the
    first nullspace column when the projection vanishes. Other targets use the minimum-norm
    least-squares solution.

    Raises:
        TrivialOnly: Zero target and trivial nullspace.
        Infeasible: The target is not reachable, or a basis element misses an endpoint zero.
    """
    if not a < b:
        raise ProfileError(f"Interval must satisfy a < b, got ({a}, {b})")
    if kind is Kind.CONE and b - a > TWO_PI + 1e-12:
        raise ProfileError(f"Cone interval wider than 2π: ({a}, {b})")
    M = moment_matrix(kind, basis, a, b)
    tgt = np.asarray(target, dtype=float)
    homogeneous = bool(np.all(tgt == 0.0))

    if homogeneous:
        s_max = float(np.linalg.norm(M, 2)) if M.size else 0.0
        if s_max <= NULL_TOL:
            N = np.eye(M.shape[1])
        else:
            N = null_space(M, rcond=NULL_TOL / s_max)
        logger.debug(f"Moment matrix rank {M.shape[1] - N.shape[1]} of {M.shape[1]}")
        if N.shape[1] == 0:
            raise TrivialOnly(f"Only κ = 0 meets homogeneous moments on ({a}, {b})")
        coeffs = N @ (N.T @ np.ones(M.shape[1]))
        if np.linalg.norm(coeffs) < 1e-8:
            coeffs = N[:, 0]
        coeffs = coeffs / np.linalg.norm(coeffs)
        lead = np.flatnonzero(np.abs(coeffs) > 1e-12)
        if lead.size and coeffs[lead[0]] < 0:
            coeffs = -coeffs
    else:
        coeffs, *_ = np.linalg.lstsq(M, tgt, rcond=None)
        residual = float(np.linalg.norm(M @ coeffs - tgt))
        if residual > MOMENT_TOL * (1.0 + float(np.linalg.norm(tgt))):
            raise Infeasible(f"Moment target {tuple(tgt)} unreachable (residual {residual:.3e})")

    if endpoint_zero:
        for j, element in enumerate(basis):
            ends = np.abs(element(np.array([a, b])))
            if np.any(ends > ENDPOINT_TOL):
                raise Infeasible(f"Basis element {j} does not vanish at both ends of ({a}, {b})")
    return coeffs


def harmonic_profile(
    aff: AffineData, vertex: object, theta: float | np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Profile ``(α, α')`` of the affine function about ``vertex``; ``u0 = aff(vertex)``."""
    theta = np.asarray(theta, dtype=float)
    gx, gy = aff.g
    c, s = np.cos(theta), np.sin(theta)
    return gx * c + gy * s, -gx * s + gy * c


def periodic_profile(kappa: TrigSeries) -> ConeProfile:
    """2π-periodic solution of ``α'' + α = κ`` with zero first harmonic.

    Raises:
        Unsolvable: If κ has a first harmonic or non-integer frequencies.
    """
    if not kappa.has_integer_frequencies():
        raise Unsolvable("Periodic κ needs integer frequencies")
    ic, is_ = kappa.first_harmonic()
    if max(abs(ic), abs(is_)) > FREDHOLM_TOL:
        raise Unsolvable(f"κ has a first harmonic (∫κcos={ic:.3e}, ∫κsin={is_:.3e})")
    kappa = TrigSeries(tuple(t for t in kappa.terms if not t.resonant), kappa.origin)
    P, dP = kappa.particular(0.0)
    return ConeProfile(0.0, None, float(P), float(dP), kappa)


def default_cone_basis(a: float, b: float, count: int = 5) -> list[TrigSeries]:
    """``sin(jπ(θ−a)/(b−a))``, ``j = 1..count``: zero at both ends."""
    width = b - a
    return [TrigSeries((TrigTerm(j * math.pi / width, 0.0, 1.0),), a) for j in range(1, count + 1)]


def default_cyl_basis(a: float, b: float, count: int = 5) -> list[PolySeries]:
    """``(x−a)^j (b−x)``, ``j = 1..count``: polynomial bumps zero at both ends."""
    width = b - a
    bump = Polynomial([0.0, width, -1.0])  # t (w − t) in t = x − a
    return [
        PolySeries(tuple((bump * Polynomial.basis(j - 1)).coef), a) for j in range(1, count + 1)
    ]
