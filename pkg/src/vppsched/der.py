"""Device-level physics and cost models: solar output, EV and swap-battery
SoC dynamics, degradation, energy cost, and discomfort."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class InvalidSpec(ValueError):
    pass


class SocOutOfRange(ValueError):
    pass


class DegenerateLoad(ValueError):
    pass


@dataclass(frozen=True)
class SolarModuleSpec:
    """One solar module plus station-level cost data."""
    p_nom_kwp: float
    v_mpp: float
    i_mpp: float
    v_oc: float
    i_sc: float
    k_v: float            # V/degC (absolute, not percent)
    k_i: float            # A/degC
    t_nominal: float      # degC, nominal operating cell temperature
    lifetime_years: float = 20.0
    install_cost: float = 0.0     # $/kWp-year
    maint_cost: float = 0.0       # $/kWp-year
    interest_rate: float = 0.05

    @property
    def fill_factor(self):
        return (self.v_mpp * self.i_mpp) / (self.v_oc * self.i_sc)

    def __post_init__(self):
        ff = self.fill_factor
        if not 0.0 < ff < 1.0:
            raise InvalidSpec(f"fill factor {ff:.4f} outside (0, 1)")


@dataclass(frozen=True)
class WeatherProfile:
    irradiance: np.ndarray     # kW/m2 per interval
    ambient_temp: np.ndarray   # degC per interval

    def __post_init__(self):
        object.__setattr__(self, "irradiance",
                           np.asarray(self.irradiance, float))
        object.__setattr__(self, "ambient_temp",
                           np.asarray(self.ambient_temp, float))
        if (self.irradiance < 0).any():
            raise InvalidSpec("irradiance must be non-negative")
        if self.irradiance.shape != self.ambient_temp.shape:
            raise InvalidSpec("irradiance/temperature length mismatch")


@dataclass
class EvRecord:
    id: int
    battery_kwh: float
    rated_kw: float
    soc_arrival: float
    t_arrive: int
    t_depart: int
    node: int

    def __post_init__(self):
        if self.t_arrive >= self.t_depart:
            raise InvalidSpec(f"EV {self.id}: arrival must precede departure")


@dataclass
class SwapBatteryRecord:
    id: int
    battery_kwh: float
    rated_kw: float
    soc_initial: float
    t_swap: int
    node: int
    soc_swap_in: float = 0.5   # SoC of the EV battery received at the swap


@dataclass(frozen=True)
class ChargerSpec:
    eta_g2v: float = 0.9
    eta_v2g: float = 0.9
    eta_g2b: float = 0.9
    eta_b2g: float = 0.9
    soc_min: float = 0.3
    soc_max: float = 0.9
    a_d: float = 1.0       # degradation denominator coefficient
    b_d: float = 0.5       # degradation exponent coefficient, in (0,1)
    c_b: float = 100.0     # battery investment cost, $/kWh

    def __post_init__(self):
        if not 0.0 < self.soc_min < self.soc_max <= 1.0:
            raise InvalidSpec("need 0 < soc_min < soc_max <= 1")
        if not 0.0 < self.b_d < 1.0:
            raise InvalidSpec("b_d must lie in (0, 1)")


@dataclass
class ControllableLoad:
    node: int
    nominal_kw: np.ndarray      # per-interval profile
    beta: float                 # discomfort coefficient
    t_start: int                # preferred curtailment window [start, stop)
    t_stop: int

    def __post_init__(self):
        self.nominal_kw = np.asarray(self.nominal_kw, float)
        if (self.nominal_kw < 0).any():
            raise InvalidSpec("nominal load must be non-negative")
        if self.t_start >= self.t_stop:
            raise InvalidSpec("t_start must precede t_stop")


def solar_power(spec, capacity_kwp, s_t, t_ambient):
    """Station output in kW for the installed capacity and weather.

    Cell temperature raises with irradiance; the open-circuit voltage term
    uses the absolute cell temperature (not its deviation from 25 degC),
    which makes output fall off faster with temperature than in standard PV
    models.  Output is floored at zero.
    """
    if capacity_kwp < 0 or s_t < 0:
        raise InvalidSpec("capacity and irradiance must be non-negative")
    modules = math.ceil(capacity_kwp / spec.p_nom_kwp - 1e-12)
    t_cell = t_ambient + s_t * (spec.t_nominal - 20.0) / 0.8
    v_s = spec.v_oc - spec.k_v * t_cell
    i_s = s_t * (spec.i_sc + spec.k_i * (t_cell - 25.0))
    p_module_w = spec.fill_factor * v_s * i_s
    return max(0.0, modules * p_module_w / 1000.0)


def _soc_step(soc_prev, power_kw, dt_h, battery_kwh,
              eta_chg, eta_dis, soc_min, soc_max, tol=1e-9):
    if power_kw >= 0:
        soc = soc_prev + eta_chg * power_kw * dt_h / battery_kwh
    else:
        soc = soc_prev + power_kw * dt_h / (eta_dis * battery_kwh)
    if soc > soc_max + tol or soc < soc_min - tol:
        raise SocOutOfRange(
            f"SoC {soc:.6f} leaves [{soc_min}, {soc_max}]; "
            "clamp power before stepping")
    return min(1.0, max(0.0, soc))


def ev_soc_step(soc_prev, power_kw, dt_h, battery_kwh, charger,
                mode_charging):
    """Advance an EV SoC one interval; power positive when charging (G2V),
    negative when discharging (V2G)."""
    if mode_charging and power_kw < 0 or (not mode_charging and power_kw > 0):
        raise SocOutOfRange("power sign inconsistent with charging mode")
    return _soc_step(soc_prev, power_kw, dt_h, battery_kwh,
                     charger.eta_g2v, charger.eta_v2g,
                     charger.soc_min, charger.soc_max)


def battery_soc_step(soc_prev, power_kw, dt_h, battery_kwh, charger,
                     mode_charging):
    """Swap-battery analogue of ev_soc_step (G2B/B2G efficiencies)."""
    if mode_charging and power_kw < 0 or (not mode_charging and power_kw > 0):
        raise SocOutOfRange("power sign inconsistent with charging mode")
    return _soc_step(soc_prev, power_kw, dt_h, battery_kwh,
                     charger.eta_g2b, charger.eta_b2g,
                     charger.soc_min, charger.soc_max)


def degradation_cost(soc_trajectory, mode_trajectory, charger, battery_kwh):
    """Battery degradation cost over a day.

    `soc_trajectory[t]` is the SoC at the end of interval t (index 0 holds
    the initial SoC); `mode_trajectory[t]` is 1 during G2V intervals and 0
    during V2G intervals.  Only V2G intervals contribute.
    """
    soc = np.asarray(soc_trajectory, float)
    z = np.asarray(mode_trajectory, int)
    if soc.size <= 1:
        return 0.0
    dod = 1.0 - soc
    exp = 1.0 - charger.b_d
    steps = dod[1:] ** exp - dod[:-1] ** exp
    scale = charger.c_b * battery_kwh / charger.a_d
    return float(np.sum(steps * (1 - z) * scale))


def cs_energy_cost(power_by_ev_kw, incentive_price_per_kwh, dt_h):
    """Charging-station energy cost: sum over intervals of the incentive
    price times the aggregate EV power.  Negative when V2G export wins."""
    p = np.atleast_2d(np.asarray(power_by_ev_kw, float))  # (n_ev, T)
    price = np.asarray(incentive_price_per_kwh, float)
    if (price < 0).any():
        raise InvalidSpec("incentive price must be non-negative")
    return float(np.sum(price * p.sum(axis=0)) * dt_h)


def cl_energy_cost(nominal_kw, adjustment_kw, market_price, dt_h):
    """Consumer energy procurement cost after curtailment x (positive x
    curtails, negative x increments)."""
    p0 = np.asarray(nominal_kw, float)
    x = np.asarray(adjustment_kw, float)
    alpha = np.asarray(market_price, float)
    return float(np.sum(alpha * (p0 - x)) * dt_h)


def discomfort_cost(nominal_kw, adjustment_kw, pricing_flags, beta):
    """Exponential discomfort from shifting flagged load: sum of
    exp(beta * flag * x / P0) - 1."""
    p0 = np.asarray(nominal_kw, float)
    x = np.asarray(adjustment_kw, float)
    flags = np.asarray(pricing_flags, int)
    active = (flags == 1) & (x != 0)
    if (active & (p0 == 0)).any():
        raise DegenerateLoad("flagged adjustment on a zero nominal load")
    ratio = np.zeros_like(p0)
    np.divide(x, p0, out=ratio, where=p0 != 0)
    return float(np.sum(np.exp(beta * flags * ratio) - 1.0))


def capital_recovery_factor(r, lifetime_years):
    """Annualization factor r(1+r)^L / ((1+r)^L - 1); 1/L at r = 0."""
    if lifetime_years < 1:
        raise InvalidSpec("lifetime must be at least one year")
    if r < 0:
        raise InvalidSpec("interest rate must be non-negative")
    if r == 0:
        return 1.0 / lifetime_years
    growth = (1.0 + r) ** lifetime_years
    return r * growth / (growth - 1.0)
