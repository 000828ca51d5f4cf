"""Scenario ingestion, fleet sampling, day-ahead schedule simulation, and
report export.

A scenario is a TOML file referencing a feeder CSV.  Operating intervals
are indexed 0..T-1, interval t covering clock hours [t, t+1); clock-hour
quantities from the probabilistic tables round to the nearest interval.
"""

from __future__ import annotations

import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import dispatch, engine, network
from .der import ChargerSpec, ControllableLoad, EvRecord, SolarModuleSpec, \
    SwapBatteryRecord, WeatherProfile, capital_recovery_factor
from .objective import PriceSchedule, ScheduleState
from .stochastic import UncertainVariable


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    pass


REPORT_KEYS = (
    "energy_purchased_mwh",
    "energy_delivered_mwh",
    "energy_lost_mwh",
    "grid_energy_cost_usd",
    "vpp_profit_usd",
    "ev_charging_cost_usd",
    "cl_electricity_cost_usd",
    "objective_value",
)


@dataclass
class EvModel:
    battery_kwh: float
    rated_kw: float


@dataclass
class OptimizerSettings:
    population: int = 40
    iterations: int = 300
    seed: int = 1
    penalty_coeff: float = 1e3
    elitism: int = 2
    utopia_population: int = 20
    utopia_iterations: int = 40

    def __post_init__(self):
        if self.population < 4:
            raise ValidationError("population must be at least 4")


@dataclass
class ScenarioConfig:
    feeder: network.Feeder
    t_slots: int
    dt_h: float
    market_price: np.ndarray
    weather: WeatherProfile
    load_shape: np.ndarray
    der_nodes: list
    evs_per_cs: int
    batteries_per_bss: int
    ev_models: list
    solar: SolarModuleSpec
    solar_capacity_max_kwp: float
    charger: ChargerSpec
    mu1: float
    mu2: float
    lambda1: float
    lambda2: float
    sigma: float
    daily_budget: float
    weights: np.ndarray
    beta_range: tuple
    uncertainty: list
    optimizer: OptimizerSettings
    v_min: float = 0.90
    v_max: float = 1.05
    name: str = "scenario"

    # derived fields
    load_positions: np.ndarray = field(default=None)
    der_positions: np.ndarray = field(default=None)
    betas: np.ndarray = field(default=None)

    def __post_init__(self):
        t = self.t_slots
        for label, arr in (("market price", self.market_price),
                           ("load shape", self.load_shape),
                           ("irradiance", self.weather.irradiance)):
            if len(arr) != t:
                raise ValidationError(f"{label} must have {t} entries")
        if not self.mu1 < self.mu2:
            raise ValidationError("mu1 must be below mu2")
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-9:
            raise ValidationError("objective weights must sum to 1")
        positions = []
        for node in self.der_nodes:
            try:
                positions.append(self.feeder.position(node))
            except KeyError:
                raise ValidationError(f"DER node {node} not in feeder")
        self.der_positions = np.array(positions, np.int64)
        loads = [i for i in range(self.feeder.n_bus)
                 if i != self.feeder.slack
                 and self.feeder.base_load_p[i] > 0]
        self.load_positions = np.array(loads, np.int64)
        lo, hi = self.beta_range
        self.betas = np.linspace(lo, hi, len(loads))

    @property
    def n_der(self):
        return len(self.der_nodes)

    @property
    def n_load(self):
        return len(self.load_positions)

    def price_schedule(self, incentive):
        return PriceSchedule(
            market=self.market_price, incentive=incentive,
            mu1=self.mu1, mu2=self.mu2, daily_budget=self.daily_budget,
            weights=self.weights, lambda1=self.lambda1, lambda2=self.lambda2)

    def nominal_loads(self, load_scale=1.0):
        """Realized consumer demand (n_load, T) in kW."""
        base = self.feeder.base_load_p[self.load_positions]
        return base[:, None] * self.load_shape[None, :] * load_scale

    def solar_module_output(self):
        """Per-module output (T,) in kW for the scenario weather."""
        spec = self.solar
        s = self.weather.irradiance
        t_cell = self.weather.ambient_temp + s * (spec.t_nominal - 20.0) / 0.8
        v_s = spec.v_oc - spec.k_v * t_cell
        i_s = s * (spec.i_sc + spec.k_i * (t_cell - 25.0))
        return np.maximum(0.0, spec.fill_factor * v_s * i_s) / 1000.0

    @property
    def solar_cost_per_kwp_year(self):
        crf = capital_recovery_factor(self.solar.interest_rate,
                                      self.solar.lifetime_years)
        return crf * self.solar.install_cost + self.solar.maint_cost

    def daytime_slots(self):
        return np.where(self.weather.irradiance >= self.sigma)[0]


def _require(table, key, where):
    if key not in table:
        raise ParseError(f"missing key {key!r} in [{where}]")
    return table[key]


def load_scenario(path):
    """Parse and validate a scenario TOML file."""
    if not os.path.exists(path):
        raise ParseError(f"scenario file not found: {path}")
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ParseError(f"invalid TOML: {exc}") from exc

    base_dir = os.path.dirname(os.path.abspath(path))
    net = raw.get("network", {})
    feeder_path = os.path.join(base_dir, _require(net, "feeder", "network"))
    if not os.path.exists(feeder_path):
        raise ParseError(f"feeder file not found: {feeder_path}")
    feeder = network.load_feeder_csv(
        feeder_path, base_kv=net.get("base_kv", 12.66),
        base_mva=net.get("base_mva", 1.0))

    time_tbl = raw.get("time", {})
    t_slots = int(time_tbl.get("slots", 24))
    dt_h = float(time_tbl.get("dt_h", 1.0))

    solar_tbl = raw.get("solar", {})
    v_oc = float(_require(solar_tbl, "v_oc", "solar"))
    i_sc = float(_require(solar_tbl, "i_sc", "solar"))
    # temperature coefficients: absolute V/degC and A/degC via k_v/k_i,
    # or datasheet %/degC via k_v_pct_per_degc/k_i_pct_per_degc
    if "k_v" in solar_tbl:
        k_v = float(solar_tbl["k_v"])
    else:
        k_v = float(solar_tbl.get("k_v_pct_per_degc", 0.3)) * v_oc / 100.0
    if "k_i" in solar_tbl:
        k_i = float(solar_tbl["k_i"])
    else:
        k_i = float(solar_tbl.get("k_i_pct_per_degc", 0.05)) * i_sc / 100.0
    solar = SolarModuleSpec(
        p_nom_kwp=float(_require(solar_tbl, "p_nom_kwp", "solar")),
        v_mpp=float(_require(solar_tbl, "v_mpp", "solar")),
        i_mpp=float(_require(solar_tbl, "i_mpp", "solar")),
        v_oc=v_oc, i_sc=i_sc, k_v=k_v, k_i=k_i,
        t_nominal=float(solar_tbl.get("t_nominal", 44.0)),
        lifetime_years=float(solar_tbl.get("lifetime_years", 20.0)),
        install_cost=float(solar_tbl.get("install_cost", 0.0)),
        maint_cost=float(solar_tbl.get("maint_cost", 0.0)),
        interest_rate=float(solar_tbl.get("interest_rate", 0.05)))

    chg = raw.get("charger", {})
    charger = ChargerSpec(
        eta_g2v=chg.get("eta_g2v", 0.9), eta_v2g=chg.get("eta_v2g", 0.9),
        eta_g2b=chg.get("eta_g2b", 0.9), eta_b2g=chg.get("eta_b2g", 0.9),
        soc_min=chg.get("soc_min", 0.3), soc_max=chg.get("soc_max", 0.9),
        a_d=chg.get("a_d", 1.0), b_d=chg.get("b_d", 0.5),
        c_b=chg.get("c_b", 100.0))

    models = [EvModel(float(m["battery_kwh"]), float(m["rated_kw"]))
              for m in raw.get("ev_models", [])]
    if not models:
        raise ParseError("at least one [[ev_models]] table required")

    unc_tbl = raw.get("uncertainty", {})
    uncertainty = []
    for key, kind in (("arrival", "ev_arrival"),
                      ("departure", "ev_departure"),
                      ("soc", "ev_soc"),
                      ("dr_start", "dr_start"),
                      ("dr_stop", "dr_stop"),
                      ("load_scale", "load_scale")):
        if key in unc_tbl:
            u = unc_tbl[key]
            uncertainty.append(UncertainVariable(
                id=key, mean=float(u["mean"]), std=float(u["std"]),
                min=float(u.get("min", -math.inf)),
                max=float(u.get("max", math.inf)), kind=kind))

    pol = raw.get("policy", {})
    opt_tbl = raw.get("optimizer", {})
    opt = OptimizerSettings(
        population=int(opt_tbl.get("population", 40)),
        iterations=int(opt_tbl.get("iterations", 300)),
        seed=int(opt_tbl.get("seed", 1)),
        penalty_coeff=float(opt_tbl.get("penalty_coeff", 1e3)),
        elitism=int(opt_tbl.get("elitism", 2)),
        utopia_population=int(opt_tbl.get("utopia_population", 20)),
        utopia_iterations=int(opt_tbl.get("utopia_iterations", 40)))

    vpp = raw.get("vpp", {})
    weather = WeatherProfile(
        irradiance=np.asarray(_require(raw.get("weather", {}), "irradiance",
                                       "weather"), float),
        ambient_temp=np.asarray(raw["weather"].get(
            "ambient_temp", [25.0] * t_slots), float))

    try:
        cfg = ScenarioConfig(
            feeder=feeder, t_slots=t_slots, dt_h=dt_h,
            market_price=np.asarray(_require(raw.get("market", {}), "price",
                                             "market"), float),
            weather=weather,
            load_shape=np.asarray(_require(raw.get("load", {}), "shape",
                                           "load"), float),
            der_nodes=list(_require(vpp, "der_nodes", "vpp")),
            evs_per_cs=int(vpp.get("evs_per_cs", 100)),
            batteries_per_bss=int(vpp.get("batteries_per_bss", 10)),
            ev_models=models, solar=solar,
            solar_capacity_max_kwp=float(vpp.get("solar_capacity_max_kwp",
                                                 2000.0)),
            charger=charger,
            mu1=float(pol.get("mu1", 0.6)), mu2=float(pol.get("mu2", 0.9)),
            lambda1=float(pol.get("lambda1", 0.2)),
            lambda2=float(pol.get("lambda2", 0.6)),
            sigma=float(pol.get("sigma", 0.05)),
            daily_budget=float(pol.get("daily_budget", 1000.0)),
            weights=np.asarray(pol.get("weights", [0.2] * 5), float),
            beta_range=(float(raw.get("load", {}).get("beta_min", 0.8)),
                        float(raw.get("load", {}).get("beta_max", 1.2))),
            uncertainty=uncertainty, optimizer=opt,
            v_min=float(net.get("v_min", 0.90)),
            v_max=float(net.get("v_max", 1.05)),
            name=raw.get("name", os.path.basename(path)))
    except ValidationError:
        raise
    except (KeyError, TypeError) as exc:
        raise ValidationError(str(exc)) from exc
    return cfg


# ---------------------------------------------------------------------------
# fleet sampling
# ---------------------------------------------------------------------------

@dataclass
class DeviceFleet:
    evs: list
    batteries: list
    loads: list
    load_scale: float = 1.0


def _round_clamp(value, lo, hi):
    return int(min(hi, max(lo, round(value))))


def sample_fleet(config, seed=None, offsets=None):
    """Draw a fleet from the probabilistic tables.

    `offsets` maps uncertain-variable ids to realized values (a PEM
    concentration location or a Monte-Carlo draw); the difference to the
    variable's mean is applied fleet-wide before discretization, so the
    all-means point reproduces the base fleet exactly.
    """
    offsets = offsets or {}
    rng = np.random.default_rng(
        config.optimizer.seed if seed is None else seed)
    unc = {v.id: v for v in config.uncertainty}

    def shift(key):
        if key in offsets and key in unc:
            return offsets[key] - unc[key].mean
        return 0.0

    def bounds(key, lo, hi):
        v = unc.get(key)
        return (v.min, v.max) if v is not None else (lo, hi)

    arr_lo, arr_hi = bounds("arrival", 1, config.t_slots - 4)
    dep_lo, dep_hi = bounds("departure", 11, config.t_slots)
    soc_lo, soc_hi = bounds("soc", config.charger.soc_min,
                            config.charger.soc_max)
    arr_mu = unc["arrival"].mean if "arrival" in unc else 8.0
    arr_sd = unc["arrival"].std if "arrival" in unc else 3.0
    dep_mu = unc["departure"].mean if "departure" in unc else 17.0
    dep_sd = unc["departure"].std if "departure" in unc else 3.0
    soc_mu = unc["soc"].mean if "soc" in unc else 0.5
    soc_sd = unc["soc"].std if "soc" in unc else 0.25

    evs = []
    ev_id = 0
    for node in config.der_nodes:
        for i in range(config.evs_per_cs):
            model = config.ev_models[i % len(config.ev_models)]
            while True:
                a = rng.normal(arr_mu, arr_sd)
                d = rng.normal(dep_mu, dep_sd)
                t_arr = _round_clamp(a + shift("arrival"), arr_lo, arr_hi)
                t_dep = _round_clamp(d + shift("departure"), dep_lo, dep_hi)
                if t_arr < t_dep:
                    break
            soc = min(soc_hi, max(soc_lo,
                                  rng.normal(soc_mu, soc_sd) + shift("soc")))
            evs.append(EvRecord(ev_id, model.battery_kwh, model.rated_kw,
                                soc, t_arr, t_dep, node))
            ev_id += 1

    day = config.daytime_slots()
    day_lo, day_hi = (int(day[0]), int(day[-1])) if day.size else (8, 16)
    batteries = []
    b_id = 0
    for node in config.der_nodes:
        for i in range(config.batteries_per_bss):
            model = config.ev_models[i % len(config.ev_models)]
            t_swap = _round_clamp(rng.normal(arr_mu, arr_sd)
                                  + shift("arrival"), day_lo, day_hi)
            # the station stock starts the day charged and ready to swap
            soc0 = config.charger.soc_max
            swap_in = min(soc_hi, max(soc_lo,
                                      rng.normal(soc_mu, soc_sd)
                                      + shift("soc")))
            batteries.append(SwapBatteryRecord(
                b_id, model.battery_kwh, model.rated_kw, soc0,
                t_swap, node, soc_swap_in=swap_in))
            b_id += 1

    st_lo, st_hi = bounds("dr_start", 1, config.t_slots - 4)
    sp_lo, sp_hi = bounds("dr_stop", 11, config.t_slots)
    st_mu = unc["dr_start"].mean if "dr_start" in unc else 8.0
    st_sd = unc["dr_start"].std if "dr_start" in unc else 3.0
    sp_mu = unc["dr_stop"].mean if "dr_stop" in unc else 17.0
    sp_sd = unc["dr_stop"].std if "dr_stop" in unc else 3.0

    loads = []
    base_p = config.feeder.base_load_p
    for k, pos in enumerate(config.load_positions):
        while True:
            s = rng.normal(st_mu, st_sd)
            e = rng.normal(sp_mu, sp_sd)
            t_start = _round_clamp(s + shift("dr_start"), st_lo, st_hi)
            t_stop = _round_clamp(e + shift("dr_stop"), sp_lo, sp_hi)
            if t_start < t_stop:
                break
        loads.append(ControllableLoad(
            node=int(config.feeder.bus_ids[pos]),
            nominal_kw=base_p[pos] * config.load_shape,
            beta=float(config.betas[k]),
            t_start=t_start, t_stop=t_stop))

    load_scale = float(offsets.get("load_scale", 1.0))
    return DeviceFleet(evs, batteries, loads, load_scale)


@dataclass
class CompiledFleet:
    """Array view of a fleet plus precomputed pricing flags."""
    ev_node: np.ndarray
    ev_e: np.ndarray
    ev_pmax: np.ndarray
    ev_soc0: np.ndarray
    ev_tarr: np.ndarray
    ev_tdep: np.ndarray
    b_node: np.ndarray
    b_e: np.ndarray
    b_pmax: np.ndarray
    b_soc0: np.ndarray
    b_tswap: np.ndarray
    b_swapin: np.ndarray
    pcl_flags: np.ndarray      # (n_load, T)
    nominal_kw: np.ndarray     # (n_load, T) realized
    load_scale: float
    fleet: DeviceFleet


def compile_fleet(config, fleet):
    node_index = {n: i for i, n in enumerate(config.der_nodes)}
    evs = fleet.evs
    bats = fleet.batteries
    t = config.t_slots
    pcl = np.zeros((config.n_load, t), np.int64)
    for i, cl in enumerate(fleet.loads):
        flags = dispatch.cl_pricing_factor(config.market_price,
                                           cl.t_start, cl.t_stop)
        pcl[i, cl.t_start:cl.t_stop] = flags
    return CompiledFleet(
        ev_node=np.array([node_index[e.node] for e in evs], np.int64),
        ev_e=np.array([e.battery_kwh for e in evs]),
        ev_pmax=np.array([e.rated_kw for e in evs]),
        ev_soc0=np.array([e.soc_arrival for e in evs]),
        ev_tarr=np.array([e.t_arrive for e in evs], np.int64),
        ev_tdep=np.array([e.t_depart for e in evs], np.int64),
        b_node=np.array([node_index[b.node] for b in bats], np.int64),
        b_e=np.array([b.battery_kwh for b in bats]),
        b_pmax=np.array([b.rated_kw for b in bats]),
        b_soc0=np.array([b.soc_initial for b in bats]),
        b_tswap=np.array([b.t_swap for b in bats], np.int64),
        b_swapin=np.array([b.soc_swap_in for b in bats]),
        pcl_flags=pcl,
        nominal_kw=config.nominal_loads(fleet.load_scale),
        load_scale=fleet.load_scale,
        fleet=fleet)


# ---------------------------------------------------------------------------
# schedule simulation
# ---------------------------------------------------------------------------

def simulate_schedule(config, fleet, decision, uncontrolled=False,
                      pf_tol=1e-8, pf_max_iter=20):
    """Sequential day simulation followed by per-interval power flow.

    `fleet` may be a DeviceFleet or a CompiledFleet; `decision` is a
    DecisionVector (repaired).  Returns a ScheduleState.
    """
    if isinstance(fleet, DeviceFleet):
        fleet = compile_fleet(config, fleet)
    t = config.t_slots
    chg = config.charger

    counts = np.ceil(decision.solar_capacity_kwp
                     / config.solar.p_nom_kwp - 1e-12).astype(np.int64)
    solar_kw = counts[:, None] * config.solar_module_output()[None, :]

    gamma = decision.incentive_price
    rank = engine.build_rank_table(gamma)
    ev_kw, b_kw, deg, dep_dev, swap_dev, _, _ = engine.simulate_fleet(
        config.n_der, t, config.dt_h,
        fleet.ev_node, fleet.ev_e, fleet.ev_pmax, fleet.ev_soc0,
        fleet.ev_tarr, fleet.ev_tdep,
        fleet.b_node, fleet.b_e, fleet.b_pmax, fleet.b_soc0,
        fleet.b_tswap, fleet.b_swapin,
        chg.eta_g2v, chg.eta_v2g, chg.eta_g2b, chg.eta_b2g,
        chg.soc_min, chg.soc_max, chg.a_d, chg.b_d, chg.c_b,
        rank, decision.ev_fraction, decision.batt_fraction,
        config.weather.irradiance, config.sigma, uncontrolled,
        solar_kw, config.lambda2)

    x = np.zeros_like(fleet.nominal_kw) if uncontrolled \
        else decision.curtailment_kw
    inj = solar_kw - ev_kw - b_kw

    feeder = config.feeder
    scale = config.load_shape[None, :] * fleet.load_scale
    p_bus = -(feeder.base_load_p[:, None] * scale).T
    q_bus = -(feeder.base_load_q[:, None] * scale).T
    p_bus[:, config.load_positions] += x.T
    p_bus[:, config.der_positions] += inj.T

    # call the compiled kernel directly: this path runs once per candidate
    # per concentration inside the optimizer loop
    s_base_kw = feeder.base_mva * 1000.0
    status, iters, vm, _, loss_pu, slack_pu, _ = engine.pf_solve_series(
        feeder._diag_g, feeder._diag_b, feeder._adj_ptr, feeder._adj_idx,
        feeder._adj_g, feeder._adj_b, feeder._parent, feeder._elim_order,
        feeder.slack, p_bus / s_base_kw, q_bus / s_base_kw,
        pf_tol, pf_max_iter)
    bad = np.nonzero(status != engine.PF_OK)[0]
    if bad.size:
        t_bad = int(bad[0])
        if status[t_bad] == engine.PF_SINGULAR:
            raise network.SingularJacobian(
                f"singular Jacobian at interval {t_bad}")
        raise network.NonConvergence(int(iters[t_bad]), float("nan"))
    grid = slack_pu * s_base_kw
    loss = loss_pu * s_base_kw
    vmin = vm.min(axis=1)
    vmax = vm.max(axis=1)

    return ScheduleState(
        dt_h=config.dt_h, solar_kw=solar_kw, ev_kw=ev_kw, batt_kw=b_kw,
        solar_capacity_kwp=decision.solar_capacity_kwp,
        solar_cost_per_kwp_year=config.solar_cost_per_kwp_year,
        curtailment_kw=x,
        nominal_load_kw=fleet.nominal_kw, pcl_flags=fleet.pcl_flags,
        betas=config.betas, market_price=config.market_price,
        incentive_price=gamma, grid_import_kw=grid, loss_kw=loss,
        voltage_min=vmin, voltage_max=vmax,
        deg_cost=float(deg), dep_soc_dev=float(dep_dev),
        swap_soc_dev=float(swap_dev), irradiance=config.weather.irradiance)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class ScheduleReport:
    interval_series: dict      # name -> (T,) array
    summary: dict              # REPORT_KEYS -> (mean, std)
    objectives: dict           # F1..F5 raw values (deterministic point)
    feasible: bool = True
    violations: dict = field(default_factory=dict)


def report_quantities(state, use_incentive=True):
    """The Table-style per-day quantities of one simulated schedule."""
    dt = state.dt_h
    inj = state.injection_kw
    purchased = float(np.sum(np.maximum(state.grid_import_kw, 0.0)) * dt)
    delivered = float(np.sum(np.maximum(inj, 0.0)) * dt)
    lost = float(np.sum(state.loss_kw) * dt)
    grid_cost = float(np.sum(state.market_price
                             * np.maximum(state.grid_import_kw, 0.0)) * dt)
    price = np.where(inj > 0, state.incentive_price[None, :],
                     state.market_price[None, :])
    vpp_profit = float(np.sum(price * inj) * dt)
    cs_price = state.incentive_price if use_incentive else state.market_price
    ev_cost = float(np.sum(cs_price[None, :] * state.ev_kw) * dt)
    cl_cost = float(np.sum(state.market_price[None, :]
                           * (state.nominal_load_kw - state.curtailment_kw))
                    * dt)
    return np.array([purchased / 1000.0, delivered / 1000.0, lost / 1000.0,
                     grid_cost, vpp_profit, ev_cost, cl_cost, 0.0])


def build_report(state, summary_stats, objectives, feasible=True,
                 violations=None):
    inj = state.injection_kw
    series = {
        "grid_import_kw": state.grid_import_kw,
        "vpp_delivery_kw": np.maximum(inj, 0.0).sum(axis=0),
        "cs_demand_kw": state.ev_kw.sum(axis=0),
        "bss_flow_kw": state.batt_kw.sum(axis=0),
        "solar_kw": state.solar_kw.sum(axis=0),
        "curtailment_kw": state.curtailment_kw.sum(axis=0),
        "incentive_price": state.incentive_price,
        "market_price": state.market_price,
        "loss_kw": state.loss_kw,
        "voltage_min_pu": state.voltage_min,
        "voltage_max_pu": state.voltage_max,
    }
    return ScheduleReport(series, summary_stats, objectives,
                          feasible=feasible, violations=violations or {})


def export_report(report, fmt, out_dir, prefix="report"):
    """Write the per-interval series (CSV) and the summary (JSON)."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if fmt in ("csv", "both"):
        path = os.path.join(out_dir, f"{prefix}_intervals.csv")
        names = list(report.interval_series)
        t = len(next(iter(report.interval_series.values()))) \
            if report.interval_series else 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["interval"] + names)
            for i in range(t):
                w.writerow([i] + [repr(float(report.interval_series[n][i]))
                                  for n in names])
        written.append(path)
    if fmt in ("json", "both"):
        path = os.path.join(out_dir, f"{prefix}_summary.json")
        payload = {
            "summary": {k: {"mean": v[0], "std": v[1]}
                        for k, v in report.summary.items()},
            "objectives": report.objectives,
            "feasible": report.feasible,
            "violations": report.violations,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return written
