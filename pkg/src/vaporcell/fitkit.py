"""Damped least-squares fitting engine used by every fit in the package.

The implementation is a classic Marquardt iteration: solve

    (J'WJ + lambda * diag(J'WJ)) * delta = -J'W r

and grow ``lambda`` tenfold on a rejected step, shrink it tenfold on an
accepted one.  Diagonal entries are clamped to a small floor before
damping so a parameter the data say nothing about cannot make the
normal equations singular.

The gradient termination test is absolute, so callers are expected to
scale their data and parameters to order unity (the fit wrappers in
this package reparameterize or normalize where needed).  All arithmetic
is plain float64 with no randomness: identical inputs give bit
identical results.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import SingularFitError

DEFAULT_MAX_ITER = 200
DEFAULT_GTOL = 1e-10
DEFAULT_XTOL = 1e-12
DEFAULT_LAMBDA0 = 1e-3

_LAMBDA_MIN = 1e-12
_LAMBDA_MAX = 1e15


class Termination(enum.Enum):
    GRADIENT_TOL = "gradient_tol"
    STEP_TOL = "step_tol"
    MAX_ITER = "max_iter"


@dataclass
class FitResult:
    """Outcome of one least-squares solve."""

    params: np.ndarray
    covariance: np.ndarray
    residual_norm: float            # sqrt of the weighted sum of squares
    iterations: int
    converged: bool
    termination_reason: Termination

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def numeric_jacobian(model, params, x, step: float | None = None) -> np.ndarray:
    """Central-difference Jacobian, step scale * max(1, |p_j|).

    The default scale cbrt(eps) balances truncation against roundoff
    for a plain central difference.
    """
    p = np.asarray(params, dtype=float)
    scale = np.cbrt(np.finfo(float).eps) if step is None else step
    cols = []
    for j in range(p.size):
        h = scale * max(1.0, abs(p[j]))
        pp = p.copy()
        pm = p.copy()
        pp[j] += h
        pm[j] -= h
        cols.append((np.asarray(model(pp, x), float)
                     - np.asarray(model(pm, x), float)) / (2.0 * h))
    return np.column_stack(cols)


def check_jacobian(model, jacobian, params, x) -> float:
    """Worst disagreement between an analytic Jacobian and finite
    differences, relative to each column's own derivative scale.

    Uses Richardson extrapolation of two central differences (steps h
    and h/2) so truncation error stays far below the reported figure
    even for sharply peaked models.  Columns that vanish identically
    compare against a floor of 1e-12 * max(1, max|analytic|) instead of
    blowing up the ratio.
    """
    p = np.asarray(params, dtype=float)
    analytic = np.asarray(jacobian(p, x), dtype=float)
    scale = np.cbrt(np.finfo(float).eps)
    coarse = numeric_jacobian(model, p, x, step=scale)
    fine = numeric_jacobian(model, p, x, step=scale / 2.0)
    fd = (4.0 * fine - coarse) / 3.0
    if analytic.shape != fd.shape:
        raise ValueError(
            f"jacobian shape {analytic.shape} does not match data/params "
            f"shape {fd.shape}"
        )
    kappa = 1e-12 * max(1.0, float(np.max(np.abs(analytic))) if analytic.size else 1.0)
    col_scale = np.maximum(
        np.max(np.abs(analytic), axis=0, keepdims=True),
        np.max(np.abs(fd), axis=0, keepdims=True),
    )
    denom = np.maximum(col_scale, kappa)
    return float(np.max(np.abs(analytic - fd) / denom))


def _weighted(r, sqrt_w):
    return r if sqrt_w is None else r * sqrt_w


def least_squares(
    model,
    x,
    y,
    initial,
    jacobian=None,
    weights=None,
    *,
    max_iter: int = DEFAULT_MAX_ITER,
    gtol: float = DEFAULT_GTOL,
    xtol: float = DEFAULT_XTOL,
    lambda0: float = DEFAULT_LAMBDA0,
) -> FitResult:
    """Minimize sum(w * (model(p, x) - y)**2) over p.

    ``model(params, x)`` returns the prediction; ``jacobian(params, x)``
    (optional) returns d(model)/d(params) with shape (len(y), len(p)).
    Without an analytic Jacobian a central-difference one is used.

    Hitting ``max_iter`` is reported through ``converged=False`` rather
    than an exception; higher-level fit wrappers decide whether that is
    fatal.  An accepted step never increases the weighted sum of
    squares.
    """
    y = np.asarray(y, dtype=float).ravel()
    p = np.array(initial, dtype=float).ravel()
    if p.size == 0:
        raise ValueError("need at least one parameter")
    if y.size < p.size:
        raise ValueError(f"{y.size} samples cannot constrain {p.size} parameters")
    sqrt_w = None
    if weights is not None:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape != y.shape:
            raise ValueError("weights must match y in length")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        sqrt_w = np.sqrt(w)
    if not np.all(np.isfinite(p)):
        raise ValueError("initial parameters must be finite")

    jac = jacobian if jacobian is not None else (
        lambda params, xx: numeric_jacobian(model, params, xx)
    )

    def residual(params):
        r = np.asarray(model(params, x), dtype=float).ravel() - y
        return _weighted(r, sqrt_w)

    def jac_weighted(params):
        J = np.asarray(jac(params, x), dtype=float)
        if J.shape != (y.size, p.size):
            raise ValueError(
                f"jacobian shape {J.shape}, expected {(y.size, p.size)}"
            )
        return J if sqrt_w is None else J * sqrt_w[:, None]

    r = residual(p)
    if not np.all(np.isfinite(r)):
        raise ValueError("model is non-finite at the initial parameters")
    ssr = float(r @ r)

    def gradient_state(params, r_vec):
        J = jac_weighted(params)
        if not np.all(np.isfinite(J)):
            raise SingularFitError("Jacobian is non-finite at an accepted point")
        return J.T @ J, J.T @ r_vec

    A, g = gradient_state(p, r)
    lam = float(lambda0)
    iterations = 0
    converged = False
    reason = Termination.MAX_ITER

    while iterations < max_iter:
        if np.max(np.abs(g)) < gtol:
            converged = True
            reason = Termination.GRADIENT_TOL
            break
        iterations += 1
        diag = np.diag(A).copy()
        floor = 1e-12 * max(1.0, float(diag.max(initial=0.0)))
        diag = np.maximum(diag, floor)
        try:
            delta = np.linalg.solve(A + lam * np.diag(diag), -g)
        except np.linalg.LinAlgError as exc:
            raise SingularFitError(f"damped normal equations singular: {exc}") from exc
        if not np.all(np.isfinite(delta)):
            raise SingularFitError("damped normal equations produced non-finite step")
        step_small = float(np.linalg.norm(delta)) <= xtol * (
            float(np.linalg.norm(p)) + xtol
        )
        p_trial = p + delta
        r_trial = residual(p_trial)
        ssr_trial = float(r_trial @ r_trial) if np.all(np.isfinite(r_trial)) else np.inf
        if ssr_trial <= ssr:
            p, r, ssr = p_trial, r_trial, ssr_trial
            A, g = gradient_state(p, r)
            lam = max(lam / 10.0, _LAMBDA_MIN)
        else:
            lam = min(lam * 10.0, _LAMBDA_MAX)
        if step_small:
            converged = True
            reason = Termination.STEP_TOL
            break

    dof = max(y.size - p.size, 1)
    cov = np.linalg.pinv(A, hermitian=True) * (ssr / dof)
    cov = 0.5 * (cov + cov.T)
    return FitResult(
        params=p,
        covariance=cov,
        residual_norm=float(np.sqrt(ssr)),
        iterations=iterations,
        converged=converged,
        termination_reason=reason,
    )
