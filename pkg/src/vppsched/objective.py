"""Stakeholder objectives, utopia normalization, constraint checking, and
penalized scalar fitness for one simulated schedule."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

# objective senses in report order F1..F5
SENSES = ("max", "min", "min", "min", "min")


class DegenerateBounds(ValueError):
    pass


@dataclass
class PriceSchedule:
    market: np.ndarray        # $/kWh per interval (utility rate)
    incentive: np.ndarray     # $/kWh per interval (VPP rate)
    mu1: float = 0.6
    mu2: float = 0.9
    daily_budget: float = 1000.0
    weights: np.ndarray = field(
        default_factory=lambda: np.full(5, 0.2))
    lambda1: float = 0.2
    lambda2: float = 0.6

    def __post_init__(self):
        self.market = np.asarray(self.market, float)
        self.incentive = np.asarray(self.incentive, float)
        self.weights = np.asarray(self.weights, float)
        if not self.mu1 < self.mu2:
            raise ValueError("mu1 must be below mu2")
        if abs(self.weights.sum() - 1.0) > 1e-9 or (self.weights < 0).any():
            raise ValueError("weights must be non-negative and sum to 1")


@dataclass
class ObjectiveVector:
    f1_profit: float        # VPP operator revenue, $
    f2_capex: float         # daily solar investment, $
    f3_dr_cost: float       # DR participants' energy cost, $
    f4_undesirable: float   # degradation $ plus discomfort
    f5_grid_cost: float     # utility energy cost, $

    def as_array(self):
        return np.array([self.f1_profit, self.f2_capex, self.f3_dr_cost,
                         self.f4_undesirable, self.f5_grid_cost])


@dataclass
class UtopiaBounds:
    lower: np.ndarray   # per-objective F_min
    upper: np.ndarray   # per-objective F_max

    def __post_init__(self):
        self.lower = np.asarray(self.lower, float)
        self.upper = np.asarray(self.upper, float)
        if (self.upper <= self.lower).any():
            raise DegenerateBounds("need F_min < F_max for every objective")


@dataclass
class ConstraintReport:
    """Per-constraint violation magnitudes (all >= 0) with their natural
    scales for penalty normalization."""
    violations: dict
    scales: dict

    def is_feasible(self, tol=1e-6):
        return all(v <= tol for v in self.violations.values())

    def total(self):
        return float(sum(self.violations.values()))


@dataclass
class ScheduleState:
    """Everything a simulated day produced, in reporting units (kW, $)."""
    dt_h: float
    solar_kw: np.ndarray          # (n_der, T)
    ev_kw: np.ndarray             # (n_der, T) aggregate station demand
    batt_kw: np.ndarray           # (n_der, T)
    solar_capacity_kwp: np.ndarray            # (n_der,)
    solar_cost_per_kwp_year: float            # crf * c_p + c_o
    curtailment_kw: np.ndarray    # (n_load, T)
    nominal_load_kw: np.ndarray   # (n_load, T) realized consumer demand
    pcl_flags: np.ndarray         # (n_load, T) 0/1
    betas: np.ndarray             # (n_load,)
    market_price: np.ndarray      # (T,)
    incentive_price: np.ndarray   # (T,)
    grid_import_kw: np.ndarray    # (T,) slack injection
    loss_kw: np.ndarray           # (T,)
    voltage_min: np.ndarray       # (T,) lowest |V| across buses, pu
    voltage_max: np.ndarray       # (T,) highest |V| across buses, pu
    deg_cost: float               # EV battery degradation, $
    dep_soc_dev: float            # sum |SoC(dep) - soc_max| over EVs
    swap_soc_dev: float           # same at swap instants
    irradiance: np.ndarray        # (T,) kW/m2

    @property
    def injection_kw(self):
        return self.solar_kw - self.ev_kw - self.batt_kw

    def discomfort_cost(self):
        ratio = np.zeros_like(self.curtailment_kw)
        np.divide(self.curtailment_kw, self.nominal_load_kw, out=ratio,
                  where=self.nominal_load_kw > 0)
        expo = self.betas[:, None] * self.pcl_flags * ratio
        return float(np.sum(np.exp(expo) - 1.0))

    def discomfort_cost_by_node(self):
        ratio = np.zeros_like(self.curtailment_kw)
        np.divide(self.curtailment_kw, self.nominal_load_kw, out=ratio,
                  where=self.nominal_load_kw > 0)
        expo = self.betas[:, None] * self.pcl_flags * ratio
        return np.sum(np.exp(expo) - 1.0, axis=1)


def evaluate_objectives(state):
    """Raw objective vector F1..F5 for a simulated schedule."""
    inj = state.injection_kw
    price = np.where(inj > 0, state.incentive_price[None, :],
                     state.market_price[None, :])
    f1 = float(np.sum(price * inj) * state.dt_h)
    f2 = float(np.sum(state.solar_cost_per_kwp_year
                      * state.solar_capacity_kwp) / 365.0)
    cs_cost = float(np.sum(state.incentive_price[None, :] * state.ev_kw)
                    * state.dt_h)
    cl_cost = float(np.sum(state.market_price[None, :]
                           * (state.nominal_load_kw - state.curtailment_kw))
                    * state.dt_h)
    f3 = cs_cost + cl_cost
    f4 = state.deg_cost + state.discomfort_cost()
    f5 = float(np.sum(state.market_price * state.grid_import_kw) * state.dt_h)
    return ObjectiveVector(f1, f2, f3, f4, f5)


def normalize_utopia(value, bounds, sense):
    """Map a raw objective into [0, 1]: 0 at its best bound, 1 at its worst.

    `bounds` is a (min, max) pair; values outside the bounds are clamped
    (and logged) rather than extrapolated.
    """
    lo, hi = bounds
    if hi <= lo:
        raise DegenerateBounds(f"bounds ({lo}, {hi}) are degenerate")
    if sense == "max":
        f = (hi - value) / (hi - lo)
    elif sense == "min":
        f = (value - lo) / (hi - lo)
    else:
        raise ValueError(f"unknown sense {sense!r}")
    if f < 0.0 or f > 1.0:
        log.debug("objective value %.6g outside bounds (%.6g, %.6g)",
                  value, lo, hi)
        f = min(1.0, max(0.0, f))
    return f


def normalize_vector(objectives, bounds):
    arr = objectives.as_array()
    return np.array([
        normalize_utopia(arr[i], (bounds.lower[i], bounds.upper[i]),
                         SENSES[i])
        for i in range(5)])


def penalized_fitness(normalized, weights, report, penalty_coeff=1e3):
    """Weighted normalized objectives plus a quadratic constraint penalty;
    lower is better."""
    fit = float(np.dot(np.asarray(weights, float),
                       np.asarray(normalized, float)))
    pen = 0.0
    for name, v in report.violations.items():
        scale = report.scales.get(name, 1.0) or 1.0
        pen += (v / scale) ** 2
    return fit + penalty_coeff * pen


def evaluate_constraints(state, prices, solar_capacity_max,
                         curtail_upper, curtail_lower, sigma=0.05,
                         equality_tol=1e-6, v_min=0.90, v_max=1.05,
                         baseline_vmin=None):
    """Violation magnitudes for the operating constraints of the scalarized
    problem.  Box constraints handled structurally by the dispatch engine
    and genome repair (device power and SoC boxes) are reported through the
    engine's accumulated deviations.

    `curtail_upper`/`curtail_lower` are the (n_load, T) curtailment boxes.
    `baseline_vmin` (optional, shape (T,)) is the uncontrolled run's
    per-interval minimum voltage; when given, the coordinated schedule must
    not degrade the daytime voltage profile below it.
    """
    dt = state.dt_h
    alpha = state.market_price
    gamma = state.incentive_price
    x = state.curtailment_kw
    p0 = state.nominal_load_kw
    viol = {}
    scales = {}

    cap = state.solar_capacity_kwp
    viol["solar_capacity_box"] = float(
        np.sum(np.maximum(0.0, cap - solar_capacity_max))
        + np.sum(np.maximum(0.0, -cap)))
    scales["solar_capacity_box"] = max(float(np.max(solar_capacity_max)), 1.0)

    viol["incentive_band"] = float(
        np.sum(np.maximum(0.0, prices.mu1 * alpha - gamma))
        + np.sum(np.maximum(0.0, gamma - prices.mu2 * alpha)))
    scales["incentive_band"] = float(
        np.mean((prices.mu2 - prices.mu1) * alpha)) or 1.0

    viol["curtailment_box"] = float(
        np.sum(np.maximum(0.0, x - curtail_upper))
        + np.sum(np.maximum(0.0, curtail_lower - x)))
    scales["curtailment_box"] = max(float(np.max(curtail_upper, initial=0.0)),
                                    1.0)

    viol["ev_departure_soc"] = max(0.0, state.dep_soc_dev - equality_tol)
    scales["ev_departure_soc"] = 0.6
    viol["swap_soc"] = max(0.0, state.swap_soc_dev - equality_tol)
    scales["swap_soc"] = 0.6

    day_sum = np.abs(x.sum(axis=1))
    viol["load_neutrality"] = float(
        np.sum(np.maximum(0.0, day_sum - equality_tol)))
    scales["load_neutrality"] = max(float(np.max(p0, initial=0.0)), 1.0)

    curtailed = np.sum(state.pcl_flags * x, axis=1) * dt
    budget = prices.lambda1 * p0.sum(axis=1) * dt
    viol["discomfort_cap"] = float(np.sum(np.maximum(0.0,
                                                     curtailed - budget)))
    scales["discomfort_cap"] = max(float(np.mean(budget)) if budget.size
                                   else 1.0, 1.0)

    # proportional fairness across consumers sharing a discomfort
    # coefficient: benefit ratios must match discomfort ratios
    benefit = np.sum(alpha[None, :] * x, axis=1) * dt
    dis = state.discomfort_cost_by_node()
    fair = 0.0
    n_load = len(state.betas)
    for i in range(n_load):
        for j in range(i + 1, n_load):
            if abs(state.betas[i] - state.betas[j]) > 1e-12:
                continue
            if dis[i] == 0.0 and dis[j] == 0.0:
                continue
            fair += abs(benefit[i] * dis[j] - benefit[j] * dis[i])
    viol["proportional_fairness"] = fair
    scales["proportional_fairness"] = max(
        float(np.mean(np.abs(benefit))) if benefit.size else 1.0, 1.0)

    lam2 = np.where(state.irradiance >= sigma, prices.lambda2, 0.0)
    need = lam2[None, :] * (state.ev_kw + state.batt_kw)
    viol["solar_adequacy"] = float(
        np.sum(np.maximum(0.0, need - state.solar_kw)))
    # tight scale: residuals of a few kW must register against fitness
    # differences of order 1e-2, or the search stalls just infeasible
    scales["solar_adequacy"] = 10.0

    inj = state.injection_kw
    delivered_revenue = float(np.sum(gamma[None, :] * np.maximum(inj, 0.0))
                              * dt)
    viol["daily_budget"] = max(0.0, delivered_revenue - prices.daily_budget)
    scales["daily_budget"] = max(prices.daily_budget, 1.0)

    viol["voltage_band"] = float(
        np.sum(np.maximum(0.0, v_min - state.voltage_min))
        + np.sum(np.maximum(0.0, state.voltage_max - v_max)))
    scales["voltage_band"] = v_max - v_min

    if baseline_vmin is not None:
        day = state.irradiance >= sigma
        viol["voltage_regression"] = float(np.sum(np.maximum(
            0.0, (baseline_vmin - state.voltage_min)[day])))
        scales["voltage_regression"] = 0.01

    return ConstraintReport(viol, scales)


def estimate_utopia_bounds(scenario, optimizer_budget):
    """Per-objective (best, worst) bounds from five single-objective runs.

    Each objective is optimized alone at the reduced budget on the
    deterministic (all-means) fleet; the worst bound of an objective is the
    worst value it takes across the five optima.
    """
    from .optimizer import single_objective_bounds
    return single_objective_bounds(scenario, optimizer_budget)
