"""Distribution of weighted sums of independent chi-squared variables."""
from __future__ import annotations

import warnings

import numpy as np
from scipy import integrate

from .errors import DegenerateDistribution


def imhof_cdf(weights, x0: float, dof=None, tol: float = 1e-10) -> tuple[float, bool]:
    """P(sum_j w_j X_j < x0) with X_j ~ chi2(dof_j), by Imhof's inversion integral.

    Returns ``(probability, converged)``.
    """
    w = np.asarray(weights, dtype=float).ravel()
    h = np.ones_like(w) if dof is None else np.broadcast_to(np.asarray(dof, dtype=float), w.shape)
    keep = w != 0
    w, h = w[keep], h[keep]
    if w.size == 0:
        raise DegenerateDistribution("all weights are zero")

    c = 0.5 * x0

    def phase(u):
        return 0.5 * np.sum(h * np.arctan(w * u))

    def envelope(u):
        return u * np.exp(0.25 * np.sum(h * np.log1p((w * u) ** 2)))

    def full(u):
        return np.sin(phase(u) - c * u) / envelope(u)

    k = 0.5 * h.sum()
    log_scale = 0.5 * np.sum(h * np.log(np.abs(w)))

    def tail_bound(u):
        # int_u^inf dt / (t rho(t)), using rho(t) >= prod (|w| t)^(h/2)
        return np.exp(-log_scale - k * np.log(u)) / k

    # [0, a] holds the curvature of theta; up to b = 1/|c| the x0 phase turns by
    # less than a radian per octave, so plain quadrature over doubling segments
    # is safe there; beyond b the x0 oscillation is handled as a Fourier weight
    a = 1.0 / np.abs(w).max()
    b = max(a, 1.0 / abs(c)) if c != 0 else np.inf
    ok = True
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        total = integrate.quad(full, 0.0, a, epsabs=tol, epsrel=1e-12, limit=200)[0]
        lo, done = a, False
        for _ in range(400):
            if tail_bound(lo) < 0.1 * tol:
                done = True
                break
            if lo >= b:
                break
            hi = min(2.0 * lo, b)
            total += integrate.quad(full, lo, hi, epsabs=0.1 * tol, epsrel=1e-12, limit=200)[0]
            lo = hi
        if not done:
            if lo < b:
                ok = False
            else:
                t1 = integrate.quad(lambda u: np.sin(phase(u)) / envelope(u), lo, np.inf,
                                    weight="cos", wvar=c, epsabs=tol, limlst=200)[0]
                t2 = integrate.quad(lambda u: np.cos(phase(u)) / envelope(u), lo, np.inf,
                                    weight="sin", wvar=c, epsabs=tol, limlst=200)[0]
                total += t1 - t2
        ok = ok and not any(issubclass(x.category, integrate.IntegrationWarning) for x in caught)
    head, tail = total, 0.0
    p = 0.5 - (head + tail) / np.pi
    if not (-1e-6 <= p <= 1 + 1e-6):
        ok = False
    return float(np.clip(p, 0.0, 1.0)), ok


def sample_cdf(weights, x0: float, n: int, rng: np.random.Generator, dof=None) -> float:
    """Monte Carlo estimate of the same probability."""
    w = np.asarray(weights, dtype=float).ravel()
    h = np.ones_like(w) if dof is None else np.broadcast_to(np.asarray(dof, dtype=float), w.shape)
    acc = np.zeros(n)
    for wj, hj in zip(w, h):
        acc += wj * rng.chisquare(hj, n)
    return float(np.mean(acc < x0))
