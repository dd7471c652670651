"""Concentration-of-measure consequences of the functional inequalities.

Exponential moments of the reference measure, the h/F transform built from a
super-Poincare rate,

    h(l) = exp(-(1+c0) l - l int_1^l s^{-2} log[2 beta(1/(c1 s^2 e^{2s}))] ds),
    F(r) = int_1^inf e^{r l} h(l) dl,
    c1   = int_{|z|<=1} |z|^{2-d-alpha} dz = d pi^{d/2} / ((2-alpha) Gamma(d/2+1)),

and the finite-window growth-exponent fits used to compare computed rates
against the model forms exp(c log^p(1+1/s)) and exp(exp(c log^p(1+1/s))).

Divergence of a moment is always decided by tail-exponent comparison, never
by watching quadrature blow up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import InnerIntegralDiverges, InsufficientRange
from .model import Measure, surface_measure

__all__ = [
    "MomentReport",
    "exp_moment",
    "c1_constant",
    "moment_transform",
    "sharpness_exponent_fit",
]


@dataclass
class MomentReport:
    lam: float
    value: float  # math.inf when the moment diverges
    diverges: bool
    c0: float
    quad_error: float

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "value": None if self.diverges else self.value,
            "diverges": self.diverges,
            "c0": None if math.isinf(self.c0) else self.c0,
            "quad_error": self.quad_error,
        }


def _moment_finite(meas: Measure, lam: float) -> bool:
    if lam <= 0.0:
        return True
    return lam < meas.potential.exp_linear_rate()


def _moment_value(meas: Measure, lam: float) -> tuple[float, float]:
    p, d = meas.potential, meas.d
    val, err = integrate.quad(
        lambda r: math.exp(lam * r - p.value(r)) * r ** (d - 1),
        0.0,
        np.inf,
        limit=400,
    )
    surf = surface_measure(d)
    return meas.c_v * surf * val, meas.c_v * surf * err + abs(val) * surf * meas.quad_error


def exp_moment(meas: Measure, lam: float) -> MomentReport:
    """int exp(lam |x|) d mu, with an analytic finiteness verdict.

    The integral is finite iff lam falls below the potential's linear tail
    rate (sup{c : V(r) - c r -> inf}); at or above that rate the report says
    Diverges without attempting quadrature.
    """
    c0 = math.inf
    if _moment_finite(meas, 1.0):
        c0 = math.log(_moment_value(meas, 1.0)[0])
    if not _moment_finite(meas, lam):
        return MomentReport(lam=lam, value=math.inf, diverges=True, c0=c0, quad_error=0.0)
    val, err = _moment_value(meas, lam)
    return MomentReport(lam=lam, value=val, diverges=False, c0=c0, quad_error=err)


def c1_constant(d: int, alpha: float) -> float:
    """int_{|z|<=1} |z|^(2-d-alpha) dz in closed form."""
    if d < 1 or not 0.0 < alpha < 2.0:
        raise ValueError("need d >= 1 and alpha in (0, 2)")
    return d * math.pi ** (d / 2.0) / ((2.0 - alpha) * math.gamma(d / 2.0 + 1.0))


def moment_transform(
    beta,
    c0: float,
    d: int,
    alpha: float,
    r: float,
    log_beta=None,
    quad_tol: float = 1e-9,
):
    """F(r) built from the rate function; returns math.inf when F diverges.

    ``beta`` maps s to beta(s); for rates too large for double precision
    pass ``log_beta`` taking log(s) and returning log(beta(s)).  The inner
    integral uses the argument 1/(c1 s^2 e^{2s}), which underflows beyond
    s ~ 350, so the log path is the robust one.
    """
    if r < 0.0:
        raise ValueError("r must be >= 0")
    c1 = c1_constant(d, alpha)

    def log2beta(s: float) -> float:
        log_u = -(math.log(c1) + 2.0 * math.log(s) + 2.0 * s)
        if log_beta is not None:
            lb = log_beta(log_u)
        else:
            u = math.exp(log_u) if log_u > -700.0 else 5e-324
            b = beta(u)
            if not (b > 0.0) or math.isinf(b):
                raise InnerIntegralDiverges(
                    f"beta({u:.3g}) = {b!r}; pass log_beta for fast-growing rates"
                )
            lb = math.log(b)
        return math.log(2.0) + lb

    def inner(lam: float) -> float:
        if lam <= 1.0:
            return 0.0
        val, _ = integrate.quad(
            lambda s: log2beta(s) / s**2, 1.0, lam, limit=200
        )
        if not math.isfinite(val):
            raise InnerIntegralDiverges("inner rate integral is not finite")
        return val

    def log_integrand(lam: float) -> float:
        return (r - 1.0 - c0) * lam - lam * inner(lam)

    # locate the decay of the outer integrand on a doubling grid
    lam_grid = [1.0]
    while lam_grid[-1] < 2.0**28:
        lam_grid.append(2.0 * lam_grid[-1])
    rho = [log_integrand(l) for l in lam_grid]
    peak = max(rho)
    if rho[-1] >= rho[-2] - 1e-12:
        return math.inf  # integrand refuses to decay: F(r) diverges
    if peak > 700.0:
        return math.inf  # finite but beyond double precision
    i_end = next(i for i in range(len(rho)) if rho[i] <= peak - 60.0 and i > rho.index(peak))
    lam_end = lam_grid[i_end]
    val, err = integrate.quad(
        lambda l: math.exp(log_integrand(l)), 1.0, lam_end,
        epsabs=0.0, epsrel=quad_tol, limit=400,
    )
    # past lam_end the log-integrand decreases by >= eta per unit lambda
    eta = (rho[i_end - 1] - rho[i_end]) / (lam_grid[i_end] - lam_grid[i_end - 1])
    remainder = math.exp(rho[i_end]) / max(eta, 1e-300)
    return val + min(remainder, err + remainder)


def sharpness_exponent_fit(
    s_values, beta_values, transform: str, values_are_log: bool = False
) -> float:
    """Least-squares growth exponent of a rate function on a finite window.

    log_vs_loglog:   slope of log(log beta)      against log(log(1+1/s))
    loglog_vs_log:   slope of log(log log beta)  against log(log(1+1/s))

    The intercept absorbs multiplicative constants, so the returned slope is
    the window estimate of the growth exponent.
    """
    s = np.asarray(s_values, dtype=float)
    vals = np.asarray(beta_values, dtype=float)
    if s.shape != vals.shape or s.ndim != 1:
        raise ValueError("need matching 1-d sample arrays")
    if len(s) < 8 or np.max(s) / np.min(s) < 1e3:
        raise InsufficientRange("need >= 8 samples spanning >= 3 decades of s")
    log_beta = vals if values_are_log else np.log(vals)
    if not np.all(np.isfinite(log_beta)):
        raise ValueError("rate samples must be finite; pass log values for huge rates")
    x = np.log(np.log1p(1.0 / s))
    if transform == "log_vs_loglog":
        if np.any(log_beta <= 0.0):
            raise ValueError("log beta must be positive for this transform")
        y = np.log(log_beta)
    elif transform == "loglog_vs_log":
        if np.any(log_beta <= 1.0):
            raise ValueError("log log beta must be positive for this transform")
        y = np.log(np.log(log_beta))
    else:
        raise ValueError("transform must be 'log_vs_loglog' or 'loglog_vs_log'")
    return float(np.polyfit(x, y, 1)[0])
