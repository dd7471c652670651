"""Spectral gaps of assembled forms as variational eigenvalues.

The discrete Poincare constant of a form matrix is 1/lambda1 with

    lambda1 = min { E(f,f) / sum_i f_i^2 w_i mu_i : <f, 1>_mu = 0 },

computed on the symmetrized operator S = W^{-1/2} Q W^{-1/2}, where Q is the
PSD matrix of the form and W = diag(w mu).  The mean-zero constraint is
enforced by exact rank-one deflation: the constraint direction u (u = sqrt(mu)
for w = 1) is shifted up by a level above the spectral radius, which leaves
every other eigenvalue untouched.  With uniform masses and unit
nearest-neighbor weights at h = 1 this convention reduces lambda1 to the
second-smallest eigenvalue of the plain graph Laplacian.

Comparisons against the continuum are by existence and stability of the gap
under truncation growth, never by matching unspecified constants.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .errors import TooLargeForDense
from .discretize import FormMatrix, assemble_form, build_grid, symmetric_form_matrix
from .model import Measure, ModelSpec, Potential

__all__ = [
    "SpectralResult",
    "spectral_gap_dense",
    "spectral_gap_lanczos",
    "weighted_gap",
    "optimal_large_jump_weight",
    "StudyResult",
    "gap_stability_study",
]

DENSE_CAP = 2000


@dataclass
class SpectralResult:
    lambda1: float
    method: str  # "dense" | "lanczos"
    residual: float
    iterations: int
    converged: bool = True
    weighted: str | None = None

    def to_dict(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "method": self.method,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "weighted": self.weighted,
        }


def _deflation_data(fm: FormMatrix, weight=None):
    """Returns (Q sparse, wmu, u-hat, sigma): the PSD form matrix, the
    denominator masses, the unit constraint direction and a shift level
    exceeding the spectral radius of S."""
    Q = symmetric_form_matrix(fm)
    if weight is None:
        wmu = fm.mu.copy()
    else:
        w = np.asarray(weight, dtype=float)
        if w.shape != (fm.n,) or np.any(w <= 0.0):
            raise ValueError("weight must be a positive vector of node length")
        wmu = w * fm.mu
    iw = 1.0 / np.sqrt(wmu)
    u = fm.mu * iw
    u = u / np.linalg.norm(u)
    # |S| row sums bound the spectral radius
    absQ = abs(Q)
    rows = iw * (absQ @ iw)
    sigma = 2.0 * float(np.max(rows)) + 1.0
    return Q, wmu, u, sigma


def _zero_mode_check(fm: FormMatrix) -> float:
    Q = symmetric_form_matrix(fm)
    ones = np.ones(fm.n)
    return float(np.max(np.abs(Q @ ones)))


def spectral_gap_dense(fm: FormMatrix, weight=None, dense_cap: int = DENSE_CAP) -> SpectralResult:
    """Full symmetric eigendecomposition path (n <= dense_cap)."""
    if fm.n > dense_cap:
        raise TooLargeForDense(f"{fm.n} nodes exceeds the dense cap {dense_cap}")
    Q, wmu, u, sigma = _deflation_data(fm, weight)
    iw = 1.0 / np.sqrt(wmu)
    S = Q.toarray() * iw[:, None] * iw[None, :]
    M = S + sigma * np.outer(u, u)
    vals, vecs = eigh(M, subset_by_index=[0, 0])
    lam = float(vals[0])
    v = vecs[:, 0]
    residual = float(np.linalg.norm(M @ v - lam * v))
    if weight is None:
        # the zero mode of the undeflated operator is the constant vector
        scale = float(np.max(np.abs(S))) or 1.0
        if _zero_mode_check(fm) > 1e-10 * scale:
            warnings.warn("constant vector is not a numerical zero mode", stacklevel=2)
        if lam <= 1e-12 * scale:
            warnings.warn(
                "spectral gap is numerically zero (disconnected weight graph?)",
                stacklevel=2,
            )
    lam = max(lam, 0.0)
    return SpectralResult(
        lambda1=lam,
        method="dense",
        residual=residual,
        iterations=1,
        weighted=None if weight is None else "nodewise",
    )


def spectral_gap_lanczos(
    fm: FormMatrix, tol: float = 1e-10, max_iter: int | None = None, weight=None
) -> SpectralResult:
    """Iterative smallest eigenvalue of the deflated operator.

    Implicitly restarted Lanczos on S + sigma u u^T; the constant direction
    is shifted above the spectrum, so the smallest eigenvalue of the shifted
    operator is the gap and its eigenvector is mu-orthogonal to constants.
    Non-convergence returns the best estimate, flagged.
    """
    Q, wmu, u, sigma = _deflation_data(fm, weight)
    iw = 1.0 / np.sqrt(wmu)
    count = {"mv": 0}

    def matvec(g):
        count["mv"] += 1
        return iw * (Q @ (iw * g)) + sigma * u * (u @ g)

    op = LinearOperator((fm.n, fm.n), matvec=matvec, dtype=float)
    maxiter = max_iter if max_iter is not None else 100 * fm.n
    try:
        vals, vecs = eigsh(op, k=1, which="SA", tol=tol, maxiter=maxiter)
        lam, v = float(vals[0]), vecs[:, 0]
        converged = True
    except ArpackNoConvergence as exc:
        if len(exc.eigenvalues):
            lam, v = float(exc.eigenvalues[0]), exc.eigenvectors[:, 0]
        else:
            lam, v = math.nan, np.zeros(fm.n)
        converged = False
    if np.any(v):
        residual = float(np.linalg.norm(matvec(v) - lam * v) / np.linalg.norm(v))
    else:
        residual = math.inf
    return SpectralResult(
        lambda1=max(lam, 0.0) if not math.isnan(lam) else lam,
        method="lanczos",
        residual=residual,
        iterations=count["mv"],
        converged=converged,
        weighted=None if weight is None else "nodewise",
    )


def weighted_gap(fm: FormMatrix, weight) -> SpectralResult:
    """Gap of the generalized problem E(f,f) / sum f^2 w mu over mean-zero f."""
    return spectral_gap_dense(fm, weight=weight)


def optimal_large_jump_weight(fm: FormMatrix) -> np.ndarray:
    """w(x) = exp(V(x)) / (1 + |x|^(d+alpha)) on the nodes."""
    r = fm.grid.radii
    expo = fm.model.d + fm.model.alpha
    return np.exp(fm.V - np.log1p(r**expo))


@dataclass
class StudyResult:
    rows: list  # (L, lambda1) pairs
    verdict: str  # "stabilizes" | "decays" | "inconclusive"
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rows": [[L, lam] for L, lam in self.rows],
            "verdict": self.verdict,
            "detail": self.detail,
        }


def gap_stability_study(
    p: Potential | Measure,
    m: ModelSpec,
    L_list,
    h: float,
    weight_fn=None,
    dense_cap: int = DENSE_CAP,
) -> StudyResult:
    """Gap as a function of the truncation radius.

    stabilizes: the top pair of gaps agrees within 10%.
    decays:     gaps fall monotonically, losing at least 2x overall.
    Both are truncation heuristics for the whole-space behavior, nothing
    stronger.
    """
    L_list = [float(L) for L in L_list]
    if len(L_list) < 3 or any(b <= a for a, b in zip(L_list, L_list[1:])):
        raise ValueError("L_list must be increasing with >= 3 entries")
    rows = []
    for L in L_list:
        g = build_grid(m.d, L, h)
        fm = assemble_form(g, m, p)
        w = weight_fn(fm) if weight_fn is not None else None
        res = spectral_gap_dense(fm, weight=w, dense_cap=dense_cap)
        rows.append((L, res.lambda1))
    gaps = np.array([lam for _, lam in rows])
    top_var = abs(gaps[-1] - gaps[-2]) / gaps[-2] if gaps[-2] > 0 else math.inf
    if top_var < 0.10:
        verdict = "stabilizes"
    elif np.all(np.diff(gaps) < 0.0) and gaps[0] >= 2.0 * gaps[-1]:
        verdict = "decays"
    else:
        verdict = "inconclusive"
    return StudyResult(
        rows=rows,
        verdict=verdict,
        detail={"top_pair_variation": float(top_var),
                "overall_drop": float(gaps[0] / gaps[-1]) if gaps[-1] > 0 else math.inf,
                "h": h},
    )
