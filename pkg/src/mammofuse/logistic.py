"""Shared logistic-regression fitting routines.

Used by the scalar probability-calibration map, the margin-to-probability
map of the linear SVM, and the stage-wise selection of bootstrapped
forward models.
"""
from __future__ import annotations

import numpy as np


def sigmoid(z):
    """Numerically safe logistic function."""
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def _nll(z: np.ndarray, y: np.ndarray) -> float:
    # -sum(y*log(p) + (1-y)*log(1-p)) via logaddexp for stability.
    return float(np.sum(np.logaddexp(0.0, z)) - np.dot(y, z))


def fit_scalar_logistic(
    x: np.ndarray,
    y: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 100,
    strict: bool = True,
) -> tuple[float, float, bool]:
    """Maximum-likelihood fit of P(y=1) = sigmoid(a*x + b) by damped Newton.

    Returns (a, b, converged). With ``strict`` a non-converged fit raises;
    otherwise the best iterate so far is returned, which is the right
    behaviour when the data are separable and the likelihood supremum sits
    at infinity.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if y.min() == y.max():
        raise ValueError("both classes must be present")

    prevalence = float(y.mean())
    a, b = 0.0, float(np.log(prevalence / (1.0 - prevalence)))
    nll = _nll(a * x + b, y)
    converged = False

    for _ in range(max_iter):
        z = a * x + b
        p = sigmoid(z)
        w = p * (1.0 - p)
        resid = p - y
        grad_a = float(np.dot(x, resid))
        grad_b = float(np.sum(resid))
        if max(abs(grad_a), abs(grad_b)) < tol * y.size:
            converged = True
            break
        h_aa = float(np.dot(w, x * x)) + 1e-12
        h_ab = float(np.dot(w, x))
        h_bb = float(np.sum(w)) + 1e-12
        det = h_aa * h_bb - h_ab * h_ab
        if det <= 0:
            break
        step_a = (h_bb * grad_a - h_ab * grad_b) / det
        step_b = (h_aa * grad_b - h_ab * grad_a) / det

        scale = 1.0
        improved = False
        for _ in range(40):
            na, nb = a - scale * step_a, b - scale * step_b
            new_nll = _nll(na * x + nb, y)
            if new_nll <= nll:
                a, b, nll = na, nb, new_nll
                improved = True
                break
            scale *= 0.5
        if not improved:
            converged = True  # cannot improve further at float precision
            break
        if scale * max(abs(step_a), abs(step_b)) < 1e-12:
            converged = True
            break

    if strict and not converged:
        raise ArithmeticError("scalar logistic fit did not converge")
    return a, b, converged


def fit_logistic_irls(
    X: np.ndarray,
    y: np.ndarray,
    max_iter: int = 25,
    tol: float = 1e-8,
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Multivariate logistic MLE with Wald covariance.

    ``X`` must already include its intercept column. Returns
    (coefficients, covariance, ok); ``ok`` is False when the Hessian turns
    singular or coefficients blow up, telling the caller to skip this
    candidate model.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, k = X.shape
    beta = np.zeros(k)
    for _ in range(max_iter):
        p = sigmoid(X @ beta)
        w = p * (1.0 - p) + 1e-12
        grad = X.T @ (y - p)
        hess = (X * w[:, None]).T @ X + 1e-10 * np.eye(k)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            return beta, np.full((k, k), np.nan), False
        beta = beta + step
        if not np.all(np.isfinite(beta)) or np.max(np.abs(beta)) > 1e6:
            return beta, np.full((k, k), np.nan), False
        if np.max(np.abs(step)) < tol:
            break
    p = sigmoid(X @ beta)
    w = p * (1.0 - p) + 1e-12
    hess = (X * w[:, None]).T @ X + 1e-10 * np.eye(k)
    try:
        cov = np.linalg.inv(hess)
    except np.linalg.LinAlgError:
        return beta, np.full((k, k), np.nan), False
    return beta, cov, True
