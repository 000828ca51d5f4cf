"""Coordination mechanisms: priority factors, pricing-factor algorithms,
mode-selection tables, curtailment bounds, and per-interval feasible power
ranges."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class EmptyWindow(ValueError):
    pass


class EvMode(enum.Enum):
    IDLE = "idle"
    UNCOORDINATED_G2V = "uncoordinated_g2v"
    COORDINATED_G2V = "coordinated_g2v"
    COORDINATED_V2G = "coordinated_v2g"


class BatteryMode(enum.Enum):
    IDLE = "idle"
    UNCOORDINATED_G2B = "uncoordinated_g2b"
    COORDINATED_G2B = "coordinated_g2b"
    COORDINATED_B2G = "coordinated_b2g"


@dataclass(frozen=True)
class CurtailmentBounds:
    upper_kw: np.ndarray   # max curtailment per interval
    lower_kw: np.ndarray   # max increment per interval (<= 0)


def _priority(soc_now, soc_max, battery_kwh, eta_chg, rated_kw,
              slack_intervals, horizon_intervals, dt_h=1.0):
    need = soc_max - soc_now
    if need <= 0:
        # a full battery never requires charging, whatever the slack
        return 0.0
    t_required_h = need * battery_kwh / (eta_chg * rated_kw)
    exponent = (slack_intervals * dt_h - t_required_h) / (
        horizon_intervals * dt_h)
    return need ** exponent


def ev_priority_factor(soc_now, soc_max, battery_kwh, eta_g2v, rated_kw,
                       t_now, t_depart, horizon, dt_h=1.0):
    """Charging urgency: below 1 there is slack, at or above 1 the EV must
    charge at rated power to reach soc_max before departure."""
    if t_now > t_depart:
        raise EmptyWindow("EV already departed")
    return _priority(soc_now, soc_max, battery_kwh, eta_g2v, rated_kw,
                     t_depart - t_now, horizon, dt_h)


def battery_priority_factor(soc_now, soc_max, battery_kwh, eta_g2b, rated_kw,
                            t_now, t_swap, horizon, dt_h=1.0):
    """Swap-battery urgency against the registered EV's arrival time."""
    return _priority(soc_now, soc_max, battery_kwh, eta_g2b, rated_kw,
                     t_swap - t_now, horizon, dt_h)


def ev_pricing_factor(prices_window, t_now, t_depart, t_needed_h, dt_h=1.0):
    """1 iff the current interval is among the ceil(t_needed/dt) cheapest of
    the remaining parking window; ties go to the earlier interval.

    `prices_window` covers intervals t_now..t_depart-1 inclusive.  Prices
    are compared at tariff resolution (0.1 cent/kWh) so equal quoted rates
    tie and the earlier interval wins.
    """
    prices = np.asarray(prices_window, float)
    if t_now >= t_depart or prices.size == 0:
        raise EmptyWindow("no remaining parking intervals")
    k = math.ceil(t_needed_h / dt_h - 1e-9)
    if k <= 0:
        return 0
    if k >= prices.size:
        return 1
    cents = np.round(prices * 1000.0).astype(int)
    rank = 1 + sum(1 for i in range(1, cents.size) if cents[i] < cents[0])
    return 1 if rank <= k else 0


def ev_mode_select(rho, pricing_flag, connected, soc_now, soc_max):
    """Mode table for EVs: urgency wins, then the pricing flag picks between
    coordinated charge and discharge."""
    if not connected or soc_now >= soc_max:
        return EvMode.IDLE
    if rho >= 1.0:
        return EvMode.UNCOORDINATED_G2V
    if pricing_flag:
        return EvMode.COORDINATED_G2V
    return EvMode.COORDINATED_V2G


def battery_mode_select(rho, irradiance, sigma_threshold, soc_now,
                        soc_bounds):
    """Mode table for swap batteries: urgency wins, otherwise irradiance
    splits charge (day) from discharge (night); full/empty degrade to
    idle."""
    soc_min, soc_max = soc_bounds
    if rho >= 1.0:
        if soc_now >= soc_max:
            return BatteryMode.IDLE
        return BatteryMode.UNCOORDINATED_G2B
    if irradiance >= sigma_threshold:
        if soc_now >= soc_max:
            return BatteryMode.IDLE
        return BatteryMode.COORDINATED_G2B
    if soc_now <= soc_min:
        return BatteryMode.IDLE
    return BatteryMode.COORDINATED_B2G


def cl_pricing_factor(prices, t_start, t_stop):
    """Flags (0/1) over the curtailment window [t_start, t_stop): 1 on the
    most expensive ceil(T0/2) intervals, earlier interval wins ties."""
    if t_start >= t_stop:
        raise EmptyWindow("empty curtailment window")
    window = np.asarray(prices, float)[t_start:t_stop]
    t0 = window.size
    if t0 == 0:
        raise EmptyWindow("prices do not cover the window")
    n_marked = math.ceil(t0 / 2)
    order = sorted(range(t0), key=lambda i: (-window[i], i))
    flags = np.zeros(t0, dtype=int)
    flags[order[:n_marked]] = 1
    return flags


def curtailment_bounds(nominal_profile):
    """Per-interval curtailment box: up to 60% of the nominal load may be
    shed, and increments may never create a new daily peak."""
    p0 = np.asarray(nominal_profile, float)
    upper = 0.6 * p0
    lower = p0 - (p0.max() if p0.size else 0.0)
    return CurtailmentBounds(upper_kw=upper, lower_kw=lower)


def feasible_power_range(mode, rated_kw, soc_now, soc_bounds, battery_kwh,
                         charger, dt_h):
    """[kW_min, kW_max] admissible for the selected mode, limited by the
    rated power and by the SoC box over one interval."""
    soc_min, soc_max = soc_bounds
    if mode in (EvMode.UNCOORDINATED_G2V, EvMode.COORDINATED_G2V):
        eta = charger.eta_g2v
    elif mode in (BatteryMode.UNCOORDINATED_G2B, BatteryMode.COORDINATED_G2B):
        eta = charger.eta_g2b
    elif mode is EvMode.COORDINATED_V2G:
        eta = charger.eta_v2g
    elif mode is BatteryMode.COORDINATED_B2G:
        eta = charger.eta_b2g
    else:
        return (0.0, 0.0)

    if mode in (EvMode.COORDINATED_V2G, BatteryMode.COORDINATED_B2G):
        cap = min(rated_kw, (soc_now - soc_min) * battery_kwh * eta / dt_h)
        return (-max(0.0, cap), 0.0)
    cap = min(rated_kw, (soc_max - soc_now) * battery_kwh / (eta * dt_h))
    cap = max(0.0, cap)
    if mode in (EvMode.UNCOORDINATED_G2V, BatteryMode.UNCOORDINATED_G2B):
        return (cap, cap)
    return (0.0, cap)
