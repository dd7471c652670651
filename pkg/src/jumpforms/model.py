"""Potentials, jump kernels and the reference probability measure.

The measure is mu(dx) = c_v * exp(-V(x)) dx on R^d with V radial. Shipped
potential families::

    linear       V(x) = lam * |x|
    power        V(x) = 1 + coeff * |x|**delta
    log_weighted V(x) = |x| * log(1+|x|)**theta
    poly_tail    V(x) = (d+eps) * log(1+|x|)
    tabulated    radial samples with linear interpolation (generic fallback)

Every analytic family also exposes a numerically stable difference
``V(r) - V(r-h)`` (naive subtraction cancels catastrophically once V(r)
exceeds ~1/eps) and a certified upper bound for radial tail integrals
``int_R^inf exp(-V(r)) r^p dr``, which is what the normalization and
moment routines rely on instead of open-ended quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate, special

from .errors import NonIntegrable, TailBoundUnavailable

__all__ = [
    "KernelKind",
    "ModelSpec",
    "Potential",
    "LinearPotential",
    "PowerPotential",
    "LogWeightedPotential",
    "PolyTailPotential",
    "TabulatedPotential",
    "ScaledPotential",
    "Measure",
    "surface_measure",
    "ball_volume",
    "eval_potential",
    "kernel_density",
    "normalizing_constant",
    "rescale_potential",
    "potential_from_config",
]


def surface_measure(d: int) -> float:
    """Surface measure of the unit sphere in R^d: d*pi^(d/2)/Gamma(d/2+1)."""
    return d * math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def ball_volume(d: int, r: float = 1.0) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * r**d


def _gamma_tail(a: float, x: float, scale: float) -> float:
    """int_x^inf exp(-scale*t) t^(a-1) dt, exact via the incomplete gamma."""
    if scale <= 0.0:
        return math.inf
    return scale ** (-a) * math.gamma(a) * float(special.gammaincc(a, scale * x))


class KernelKind(str, Enum):
    FINITE_RANGE = "finite_range"
    LARGE_JUMP = "large_jump"
    FULL = "full"
    TEMPERED = "tempered"


@dataclass(frozen=True)
class ModelSpec:
    """Dimension, stability index and jump-kernel kind of one Dirichlet form."""

    d: int
    alpha: float
    kernel: KernelKind = KernelKind.FINITE_RANGE
    delta: float = 0.0
    range_cut: float = 1.0

    def __post_init__(self):
        if self.d < 1 or int(self.d) != self.d:
            raise ValueError(f"d must be a positive integer, got {self.d}")
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if self.delta < 0.0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if self.range_cut <= 0.0:
            raise ValueError(f"range_cut must be > 0, got {self.range_cut}")
        object.__setattr__(self, "kernel", KernelKind(self.kernel))


class Potential:
    """Radial potential base class.

    Subclasses fill in ``value`` and the metadata attributes; the generic
    ``diff`` falls back to naive subtraction, which analytic families
    override with cancellation-free forms.
    """

    family = "generic"
    radial = True
    #: radius beyond which V(|x|) is nondecreasing
    eventually_monotone_from: float = 0.0
    #: radius from which x -> V(x) - V(x - 1/2) is certified nondecreasing
    #: (None when the family gives no such certificate)
    inner_monotone_from: float | None = None

    def value(self, r):
        raise NotImplementedError

    def __call__(self, x):
        return self.value(_radius(x))

    def diff(self, r, h):
        """V(r) - V(r - h) for 0 <= h <= r."""
        r = np.asarray(r, dtype=float)
        return self.value(r) - self.value(r - h)

    def is_integrable(self, d: int) -> bool:
        raise NotImplementedError

    def tail_moment_bound(self, R: float, power: float) -> float:
        """Certified upper bound for int_R^inf exp(-V(r)) r^power dr.

        Returns inf when no bound is available yet at this R (the caller
        grows R); raises TailBoundUnavailable when the potential carries
        no usable tail metadata at all.
        """
        raise NotImplementedError

    def exp_linear_rate(self) -> float:
        """sup{c : V(r) - c*r -> +inf}, the exponential-moment threshold."""
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def describe(self) -> dict:
        return {"family": self.family, "params": self.params()}

    def __repr__(self):
        ps = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{type(self).__name__}({ps})"


def _radius(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return float(abs(x))
    if x.ndim == 1:
        return float(np.linalg.norm(x))
    return np.linalg.norm(x, axis=-1)


class LinearPotential(Potential):
    """V(x) = lam * |x| (exponential measure; lam = 0 gives V identically 0)."""

    family = "linear"

    def __init__(self, lam: float):
        if lam < 0.0:
            raise ValueError("lam must be >= 0")
        self.lam = float(lam)

    def value(self, r):
        return self.lam * np.asarray(r, dtype=float)

    def diff(self, r, h):
        return self.lam * h * np.ones_like(np.asarray(r, dtype=float))

    @property
    def inner_monotone_from(self):
        return 1.0

    def is_integrable(self, d):
        return self.lam > 0.0

    def tail_moment_bound(self, R, power):
        if self.lam <= 0.0:
            return math.inf
        return _gamma_tail(power + 1.0, R, self.lam)

    def exp_linear_rate(self):
        return self.lam

    def params(self):
        return {"lam": self.lam}


class PowerPotential(Potential):
    """V(x) = 1 + coeff * |x|**delta_pow."""

    family = "power"

    def __init__(self, delta_pow: float, coeff: float = 1.0):
        if delta_pow <= 0.0:
            raise ValueError("delta_pow must be > 0")
        if coeff <= 0.0:
            raise ValueError("coeff must be > 0")
        self.delta_pow = float(delta_pow)
        self.coeff = float(coeff)

    def value(self, r):
        return 1.0 + self.coeff * np.asarray(r, dtype=float) ** self.delta_pow

    def diff(self, r, h):
        # c*(r^p - (r-h)^p) = -c*r^p*expm1(p*log1p(-h/r)), stable for huge r
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -self.coeff * r**self.delta_pow * np.expm1(
                self.delta_pow * np.log1p(-h / r)
            )
        small = r <= h
        if np.any(small):
            out = np.where(small, self.coeff * (r**self.delta_pow
                                                - np.abs(r - h) ** self.delta_pow), out)
        return out

    @property
    def inner_monotone_from(self):
        # V convex on (0, inf) iff delta_pow >= 1
        return 1.0 if self.delta_pow >= 1.0 else None

    def is_integrable(self, d):
        return True

    def tail_moment_bound(self, R, power):
        a = (power + 1.0) / self.delta_pow
        y = self.coeff * R**self.delta_pow
        return (
            math.exp(-1.0)
            / self.delta_pow
            * self.coeff ** (-a)
            * math.gamma(a)
            * float(special.gammaincc(a, y))
        )

    def exp_linear_rate(self):
        if self.delta_pow > 1.0:
            return math.inf
        if self.delta_pow == 1.0:
            return self.coeff
        return 0.0

    def params(self):
        return {"delta_pow": self.delta_pow, "coeff": self.coeff}


class LogWeightedPotential(Potential):
    """V(x) = |x| * log(1+|x|)**theta."""

    family = "log_weighted"

    def __init__(self, theta: float):
        self.theta = float(theta)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return r * np.log1p(r) ** self.theta

    def diff(self, r, h):
        r = np.asarray(r, dtype=float)
        rh = r - h
        g = np.log1p(rh)
        with np.errstate(divide="ignore", invalid="ignore"):
            dg_rel = np.log1p(np.log1p(h / (1.0 + rh)) / g)
            out = r * g**self.theta * np.expm1(self.theta * dg_rel) + h * g**self.theta
        bad = ~np.isfinite(out) | (rh <= 0.0)
        if np.any(bad):
            out = np.where(bad, self.value(r) - self.value(np.abs(rh)), out)
        return out

    @property
    def inner_monotone_from(self):
        # V' = log^t(1+r) * (1 + t*r/((1+r)log(1+r))) is nondecreasing on
        # [1/2, inf) for t >= 0, so the half-step difference is too.
        return 1.0 if self.theta >= 0.0 else None

    def is_integrable(self, d):
        return True

    def tail_moment_bound(self, R, power):
        if self.theta >= 0.0:
            m = math.log1p(R) ** self.theta
            return _gamma_tail(power + 1.0, R, m)
        # theta < 0: V(r) >= c*sqrt(r) once sqrt(r)*log^theta(1+r) is
        # nondecreasing, i.e. (1+r)log(1+r)/r >= 2|theta|
        if (1.0 + R) * math.log1p(R) / max(R, 1e-300) < 2.0 * abs(self.theta):
            return math.inf
        c = math.sqrt(R) * math.log1p(R) ** self.theta
        return 2.0 * _gamma_tail(2.0 * power + 2.0, math.sqrt(R), c)

    def exp_linear_rate(self):
        if self.theta > 0.0:
            return math.inf
        if self.theta == 0.0:
            return 1.0
        return 0.0

    def params(self):
        return {"theta": self.theta}


class PolyTailPotential(Potential):
    """V(x) = (d + eps) * log(1 + |x|); the measure has the polynomial tail
    (1+|x|)^(-d-eps), integrable iff eps > 0."""

    family = "poly_tail"

    def __init__(self, eps: float, d: int = 1):
        if d < 1:
            raise ValueError("d must be >= 1")
        self.eps = float(eps)
        self.d = int(d)

    def value(self, r):
        return (self.d + self.eps) * np.log1p(np.asarray(r, dtype=float))

    def diff(self, r, h):
        r = np.asarray(r, dtype=float)
        return (self.d + self.eps) * np.log1p(h / (1.0 + r - h))

    @property
    def inner_monotone_from(self):
        return None  # V concave: the half-step difference decreases

    def is_integrable(self, d):
        return self.eps > 0.0

    def tail_moment_bound(self, R, power):
        # r^power <= (1+r)^power
        decay = self.d + self.eps - power - 1.0
        if decay <= 0.0:
            return math.inf
        return (1.0 + R) ** (-decay) / decay

    def exp_linear_rate(self):
        return 0.0

    def params(self):
        return {"eps": self.eps, "d": self.d}


class TabulatedPotential(Potential):
    """Generic radial potential given by samples, linear interpolation in
    between.  Beyond the last sample the potential continues linearly with
    slope ``tail_rate`` when provided; without tail metadata the
    normalization and moment routines refuse to certify anything."""

    family = "tabulated"

    def __init__(self, radii, values, tail_rate: float | None = None,
                 eventually_monotone_from: float | None = None):
        radii = np.asarray(radii, dtype=float)
        values = np.asarray(values, dtype=float)
        if radii.ndim != 1 or radii.shape != values.shape or len(radii) < 2:
            raise ValueError("need matching 1-d radius/value arrays, length >= 2")
        if radii[0] < 0.0 or np.any(np.diff(radii) <= 0.0):
            raise ValueError("radii must be nonnegative and strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("potential samples must be finite (local boundedness)")
        self.radii = radii
        self.values = values
        self.tail_rate = None if tail_rate is None else float(tail_rate)
        if eventually_monotone_from is None:
            # estimate: last radius after which the samples never decrease
            dec = np.where(np.diff(values) < 0.0)[0]
            eventually_monotone_from = radii[dec[-1] + 1] if len(dec) else radii[0]
        self.eventually_monotone_from = float(eventually_monotone_from)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        out = np.interp(r, self.radii, self.values)
        if self.tail_rate is not None:
            beyond = r > self.radii[-1]
            if np.any(beyond):
                out = np.where(
                    beyond, self.values[-1] + self.tail_rate * (r - self.radii[-1]), out
                )
        return out

    def is_integrable(self, d):
        if self.tail_rate is None:
            raise TailBoundUnavailable(
                "tabulated potential has no tail_rate; cannot certify integrability"
            )
        return self.tail_rate > 0.0

    def tail_moment_bound(self, R, power):
        if self.tail_rate is None:
            raise TailBoundUnavailable(
                "tabulated potential has no tail_rate; cannot bound the tail"
            )
        if self.tail_rate <= 0.0 or R < self.radii[-1]:
            return math.inf
        # V(r) >= V(R) + rate*(r-R) for r >= R beyond the table
        vR = float(self.value(R))
        m = self.tail_rate
        return math.exp(-vR + m * R) * _gamma_tail(power + 1.0, R, m)

    def exp_linear_rate(self):
        if self.tail_rate is None:
            raise TailBoundUnavailable("tabulated potential has no tail_rate")
        return max(self.tail_rate, 0.0)

    def params(self):
        return {"n_samples": len(self.radii), "tail_rate": self.tail_rate}


class ScaledPotential(Potential):
    """x -> V(a*x) for a base potential V; closes the family list under the
    rescaling transform when no exact in-family image exists."""

    family = "scaled"

    def __init__(self, base: Potential, a: float):
        if a <= 0.0:
            raise ValueError("a must be > 0")
        self.base = base
        self.a = float(a)

    def value(self, r):
        return self.base.value(self.a * np.asarray(r, dtype=float))

    def diff(self, r, h):
        return self.base.diff(self.a * np.asarray(r, dtype=float), self.a * h)

    @property
    def eventually_monotone_from(self):
        return self.base.eventually_monotone_from / self.a

    @property
    def inner_monotone_from(self):
        # half-step differences rescale but monotonicity of V' is preserved
        inner = self.base.inner_monotone_from
        return None if inner is None else max(inner / self.a, 1.0)

    def is_integrable(self, d):
        return self.base.is_integrable(d)

    def tail_moment_bound(self, R, power):
        return self.a ** (-(power + 1.0)) * self.base.tail_moment_bound(
            self.a * R, power
        )

    def exp_linear_rate(self):
        return self.base.exp_linear_rate() * self.a

    def params(self):
        return {"a": self.a, "base": self.base.describe()}


@dataclass(frozen=True)
class Measure:
    """Normalized measure c_v * exp(-V) dx together with the certified
    absolute error of the constant."""

    potential: Potential
    d: int
    c_v: float
    quad_error: float
    r_tail: float = field(default=0.0, repr=False)

    def density(self, x):
        return self.c_v * np.exp(-self.potential(x))

    def ball_mass(self, radius: float, tol: float = 1e-12) -> float:
        """mu(B(0, radius)) by radial quadrature."""
        if radius <= 0.0:
            return 0.0
        p, d = self.potential, self.d
        val, _ = integrate.quad(
            lambda r: math.exp(-p.value(r)) * r ** (d - 1), 0.0, radius,
            epsabs=tol, epsrel=tol, limit=200,
        )
        return min(1.0, self.c_v * surface_measure(d) * val)

    def tail_mass(self, radius: float, tol: float = 1e-12) -> float:
        return max(0.0, 1.0 - self.ball_mass(radius, tol=tol))

    def interval_mass(self, a: float, b: float, tol: float = 1e-12) -> float:
        """mu([a, b]) in d = 1 (signed coordinates)."""
        if self.d != 1:
            raise ValueError("interval_mass is only defined in d = 1")
        p = self.potential
        val, _ = integrate.quad(
            lambda t: math.exp(-p.value(abs(t))), a, b, epsabs=tol, epsrel=tol,
            limit=200,
        )
        return self.c_v * val


def eval_potential(p: Potential, x) -> float:
    """V at a point of R^d (scalar in d = 1, coordinate sequence otherwise)."""
    return float(np.asarray(p(x), dtype=float))


def kernel_density(m: ModelSpec, r):
    """Jump intensity at distance r > 0 for the model's kernel kind."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("kernel_density requires r > 0")
    base = r ** (-(m.d + m.alpha))
    cut = m.range_cut
    if m.kernel is KernelKind.FINITE_RANGE:
        out = np.where(r <= cut, base, 0.0)
    elif m.kernel is KernelKind.LARGE_JUMP:
        out = np.where(r > cut, base, 0.0)
    elif m.kernel is KernelKind.TEMPERED:
        out = base * np.exp(-m.delta * r)
    else:
        out = base
    return out if out.ndim else float(out)


def normalizing_constant(p: Potential, d: int = 1, tol: float = 1e-10) -> Measure:
    """Normalize exp(-V) dx on R^d.

    Radial reduction: 1/c_v = surface(d) * int_0^inf exp(-V(r)) r^(d-1) dr.
    Adaptive quadrature on [0, R] plus the family's certified tail bound,
    with R doubled until the tail contributes less than tol/10.
    """
    if not p.is_integrable(d):
        raise NonIntegrable(f"exp(-V) is not integrable in d={d} for {p!r}")
    integrand = lambda r: math.exp(-p.value(r)) * r ** (d - 1)
    R = max(8.0, 2.0 * p.eventually_monotone_from + 2.0)
    body, err = integrate.quad(integrand, 0.0, R, epsabs=0.0,
                               epsrel=min(tol, 1e-9), limit=200)
    tail = p.tail_moment_bound(R, d - 1.0)
    for _ in range(70):
        if math.isfinite(tail) and tail <= tol / 10.0 * body:
            break
        seg, seg_err = integrate.quad(integrand, R, 2.0 * R, epsabs=0.0,
                                      epsrel=min(tol, 1e-9), limit=200)
        body += seg
        err += seg_err
        R *= 2.0
        tail = p.tail_moment_bound(R, d - 1.0)
    else:
        raise NonIntegrable(f"tail bound did not converge for {p!r} (R={R:.3g})")
    total = body + 0.5 * tail
    total_err = err + 0.5 * tail
    surf = surface_measure(d)
    c_v = 1.0 / (surf * total)
    quad_error = surf * total_err * c_v**2
    return Measure(potential=p, d=d, c_v=c_v, quad_error=quad_error, r_tail=R)


def rescale_potential(p: Potential, a: float) -> Potential:
    """The potential x -> V(a x); exact in-family image where one exists."""
    if a <= 0.0:
        raise ValueError("a must be > 0")
    if a == 1.0:
        return p
    if isinstance(p, LinearPotential):
        return LinearPotential(p.lam * a)
    if isinstance(p, PowerPotential):
        return PowerPotential(p.delta_pow, coeff=p.coeff * a**p.delta_pow)
    if isinstance(p, ScaledPotential):
        return rescale_potential(p.base, p.a * a)
    return ScaledPotential(p, a)


_FAMILIES = {
    "linear": lambda prm: LinearPotential(prm["lam"]),
    "power": lambda prm: PowerPotential(prm["delta_pow"], prm.get("coeff", 1.0)),
    "log_weighted": lambda prm: LogWeightedPotential(prm["theta"]),
    "poly_tail": lambda prm: PolyTailPotential(prm["eps"], prm.get("d", 1)),
    "tabulated": lambda prm: TabulatedPotential(
        prm["radii"], prm["values"], prm.get("tail_rate"),
        prm.get("eventually_monotone_from"),
    ),
}


def potential_from_config(cfg: dict) -> Potential:
    """Build a potential from {"family": ..., "params": {...}}."""
    family = cfg.get("family")
    if family not in _FAMILIES:
        raise ValueError(f"unknown potential family {family!r}")
    return _FAMILIES[family](cfg.get("params", {}))
