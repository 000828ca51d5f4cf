"""Hong's (2m+1) point-estimate method over Gaussian inputs, with a
Monte-Carlo cross-check.

Each uncertain variable contributes two shifted concentrations; the third
(zero-shift) location of every variable collapses into a single evaluation
at the all-means point carrying the summed k=3 weight, so a model with m
variables costs 2m+1 deterministic evaluations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class InvalidMoments(ValueError):
    pass


class ZeroStd(ValueError):
    pass


@dataclass(frozen=True)
class UncertainVariable:
    id: str
    mean: float
    std: float
    min: float = -math.inf
    max: float = math.inf
    kind: str = "generic"

    def __post_init__(self):
        if self.std < 0:
            raise ValueError("std must be non-negative")
        if not self.min <= self.mean <= self.max:
            raise ValueError("mean must lie inside the truncation bounds")


@dataclass(frozen=True)
class Concentration:
    variable: str     # "" for the shared all-means point
    location: float
    weight: float
    index: int        # k in {1, 2, 3}


def standard_central_moments(variable):
    """Standardized third and fourth central moments (skewness, kurtosis).

    Gaussian inputs have (0, 3) analytically, which is what every variable
    here is; the function raises ZeroStd for deterministic variables so the
    caller can drop them from the concentration set.
    """
    if variable.std == 0:
        raise ZeroStd(f"variable {variable.id} is deterministic")
    return 0.0, 3.0


def pem_concentrations(variables):
    """Concentration set for Hong's (2m+1) scheme.

    Returns a list of Concentration, the shifted pairs first and the merged
    all-means point last.  Locations are clamped into each variable's
    truncation bounds.
    """
    active = [v for v in variables if v.std > 0]
    m = len(active)
    if m < 1:
        raise InvalidMoments("need at least one variable with std > 0")
    out = []
    w3_total = 0.0
    for v in active:
        lam3, lam4 = standard_central_moments(v)
        disc = lam4 - 0.75 * lam3 ** 2
        if disc < 0 or lam4 == lam3 ** 2:
            raise InvalidMoments(f"variable {v.id}: invalid moments")
        for k in (1, 2):
            xi = lam3 / 2.0 + (-1.0) ** (3 - k) * math.sqrt(disc)
            xi1 = lam3 / 2.0 + math.sqrt(disc)
            xi2 = lam3 / 2.0 - math.sqrt(disc)
            w = (-1.0) ** (3 - k) / (xi * (xi1 - xi2))
            loc = v.mean + xi * v.std
            loc = min(v.max, max(v.min, loc))
            out.append(Concentration(v.id, loc, w, k))
        w3_total += 1.0 / m - 1.0 / (lam4 - lam3 ** 2)
    out.append(Concentration("", 0.0, w3_total, 3))
    return out


def pem_estimate(variables, evaluator):
    """Mean and standard deviation of the evaluator output under the PEM.

    `evaluator` maps a dict {variable id: value} (variables absent from the
    dict sit at their means) to a scalar or a 1-D array of quantities.
    Returns (mean, std) with the same shape as the evaluator output.
    """
    concentrations = pem_concentrations(variables)
    acc1 = acc2 = None
    for c in concentrations:
        point = {c.variable: c.location} if c.variable else {}
        g = np.atleast_1d(np.asarray(evaluator(point), float))
        if acc1 is None:
            acc1 = np.zeros_like(g)
            acc2 = np.zeros_like(g)
        acc1 += c.weight * g
        acc2 += c.weight * g * g
    var = np.maximum(acc2 - acc1 ** 2, 0.0)
    mean, std = acc1, np.sqrt(var)
    if mean.size == 1:
        return float(mean[0]), float(std[0])
    return mean, std


def sample_truncated(variable, rng, size=None):
    """Truncated-Gaussian draws by rejection inside [min, max]."""
    if variable.std == 0:
        return (np.full(size, variable.mean) if size is not None
                else variable.mean)
    n = int(np.prod(size)) if size is not None else 1
    out = np.empty(n)
    filled = 0
    while filled < n:
        draw = rng.normal(variable.mean, variable.std, size=n - filled)
        ok = draw[(draw >= variable.min) & (draw <= variable.max)]
        out[filled:filled + ok.size] = ok
        filled += ok.size
    if size is None:
        return float(out[0])
    return out.reshape(size)


def monte_carlo_oracle(variables, evaluator, n_samples, rng_seed=0):
    """Sample mean/std of the evaluator under joint truncated-Gaussian
    draws; reproducible for a fixed seed."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(rng_seed)
    acc1 = acc2 = None
    for _ in range(n_samples):
        values = {v.id: sample_truncated(v, rng) for v in variables}
        g = np.atleast_1d(np.asarray(evaluator(values), float))
        if acc1 is None:
            acc1 = np.zeros_like(g)
            acc2 = np.zeros_like(g)
        acc1 += g
        acc2 += g * g
    mean = acc1 / n_samples
    var = np.maximum(acc2 / n_samples - mean ** 2, 0.0)
    std = np.sqrt(var)
    if mean.size == 1:
        return float(mean[0]), float(std[0])
    return mean, std
