"""Population-based constrained search over the day-ahead decision vector.

The genome concatenates solar capacities, incentive prices, per-(node,
interval) dispatch fractions for EVs and swap batteries, and per-(load,
interval) curtailments.  The update rule is the standard Jaya move
x' = x + r1 (best - |x|) - r2 (worst - |x|) with greedy acceptance and a
small elite set that is never perturbed; variants plug in through the
`step_fn` hook of `run`.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from . import dispatch, scenario as sc_mod, stochastic
from .objective import ObjectiveVector, PriceSchedule, UtopiaBounds, \
    evaluate_constraints, evaluate_objectives, normalize_vector, \
    penalized_fitness


class InfeasibleBest(RuntimeError):
    """The best schedule found still violates constraints above tolerance."""

    def __init__(self, result):
        self.result = result
        super().__init__("best schedule is infeasible: "
                         + ", ".join(sorted(
                             k for k, v in result.violations.items()
                             if v > 1e-6)))


@dataclass
class DecisionVector:
    solar_capacity_kwp: np.ndarray   # (n_der,)
    incentive_price: np.ndarray      # (T,)
    ev_fraction: np.ndarray          # (n_der, T)
    batt_fraction: np.ndarray        # (n_der, T)
    curtailment_kw: np.ndarray       # (n_load, T)


class GenomeBoxes:
    """Flat gene boxes plus the genome <-> DecisionVector mapping."""

    def __init__(self, config):
        n_der, t, n_load = config.n_der, config.t_slots, config.n_load
        self.n_der, self.t_slots, self.n_load = n_der, t, n_load
        nominal = config.nominal_loads()
        x_upper = np.empty((n_load, t))
        x_lower = np.empty((n_load, t))
        for i in range(n_load):
            b = dispatch.curtailment_bounds(nominal[i])
            x_upper[i] = b.upper_kw
            x_lower[i] = b.lower_kw
        self.x_upper = x_upper
        self.x_lower = x_lower

        sizes = [n_der, t, n_der * t, n_der * t, n_load * t]
        offs = np.concatenate([[0], np.cumsum(sizes)])
        self.slices = [slice(offs[i], offs[i + 1]) for i in range(5)]
        self.size = int(offs[-1])

        lower = np.empty(self.size)
        upper = np.empty(self.size)
        lower[self.slices[0]] = 0.0
        upper[self.slices[0]] = config.solar_capacity_max_kwp
        lower[self.slices[1]] = config.mu1 * config.market_price
        upper[self.slices[1]] = config.mu2 * config.market_price
        lower[self.slices[2]] = 0.0
        upper[self.slices[2]] = 1.0
        lower[self.slices[3]] = 0.0
        upper[self.slices[3]] = 1.0
        lower[self.slices[4]] = x_lower.ravel()
        upper[self.slices[4]] = x_upper.ravel()
        self.lower = lower
        self.upper = upper

    def unflatten(self, genome):
        s = self.slices
        return DecisionVector(
            solar_capacity_kwp=genome[s[0]],
            incentive_price=genome[s[1]],
            ev_fraction=genome[s[2]].reshape(self.n_der, self.t_slots),
            batt_fraction=genome[s[3]].reshape(self.n_der, self.t_slots),
            curtailment_kw=genome[s[4]].reshape(self.n_load, self.t_slots))

    def flatten(self, decision):
        return np.concatenate([
            np.ravel(decision.solar_capacity_kwp),
            np.ravel(decision.incentive_price),
            np.ravel(decision.ev_fraction),
            np.ravel(decision.batt_fraction),
            np.ravel(decision.curtailment_kw)])

    def heuristic_seed(self):
        """Greedy-charge start: full solar, top-of-band incentive, full
        dispatch fractions, no curtailment."""
        g = np.empty(self.size)
        g[self.slices[0]] = self.upper[self.slices[0]]
        g[self.slices[1]] = self.upper[self.slices[1]]
        g[self.slices[2]] = 1.0
        g[self.slices[3]] = 1.0
        g[self.slices[4]] = 0.0
        return g


def repair(vector, boxes):
    """Project a genome into the boxes and restore daily load neutrality.

    Curtailment genes of each load node are mean-shifted so they sum to
    zero; residuals created by re-clamping are redistributed over the genes
    that still have box room, so the zero-sum holds exactly.
    """
    g = np.clip(vector, boxes.lower, boxes.upper)
    s = boxes.slices[4]
    x = g[s].reshape(boxes.n_load, boxes.t_slots)
    lo, hi = boxes.x_lower, boxes.x_upper
    x -= x.mean(axis=1, keepdims=True)
    np.clip(x, lo, hi, out=x)
    for _ in range(64):
        r = x.sum(axis=1)
        rows = np.nonzero(np.abs(r) > 1e-12)[0]
        if rows.size == 0:
            break
        for i in rows:
            free = x[i] > lo[i] + 1e-15 if r[i] > 0 \
                else x[i] < hi[i] - 1e-15
            n_free = int(free.sum())
            if n_free == 0:
                break
            x[i, free] -= r[i] / n_free
            np.clip(x[i], lo[i], hi[i], out=x[i])
    g[s] = x.ravel()
    return g


def voltage_sensitivity(config, positions=None):
    """Per-bus drop in feeder minimum voltage for a 200 kW load step at
    peak consumer demand.  Small values mark electrically stiff buses that
    can absorb extra demand without denting the voltage profile."""
    feeder = config.feeder
    if positions is None:
        positions = config.der_positions
    peak = float(np.max(config.load_shape))
    p = -feeder.base_load_p * peak
    q = -feeder.base_load_q * peak
    base = float(np.min(feeder.solve(p, q).voltage_mag))
    sens = np.empty(len(positions))
    for i, pos in enumerate(positions):
        bumped = p.copy()
        bumped[pos] -= 200.0
        sens[i] = base - float(np.min(feeder.solve(bumped, q).voltage_mag))
    return sens


def price_steering_seed(config, boxes):
    """Second heuristic start: a flat daytime incentive window.

    Most of the daylight hours quote one identical incentive rate, the
    lowest level that fits inside every member's regulatory band.  Equal
    quotes make the cheapest-hours ranking tie, ties resolve to the
    earliest interval, so each charger starts at its own arrival — the
    same instants the uncontrolled fleet loads the feeder — and the
    controlled voltage profile tracks the uncontrolled one instead of
    piling demand onto new intervals.  Hours whose band floor exceeds the
    shared level (the priciest morning tariff) are left at their floor:
    chargers arriving there defer into the flat window, which is where
    the schedule undercuts the uncontrolled charging bill.  A rising
    dispatch-fraction ramp across the window meters those deferred
    chargers out a little per interval rather than in one burst; dusk
    quotes step upward so nothing defers into the evening peak, where
    every delivered kWh is at its lossiest.

    Load shifting shaves the priciest intervals.  Every node balances its
    own day (per-node load neutrality), so where the refill lands decides
    the cost: electrically stiff buses refill on the cheap solar window
    at almost no delivery loss, weak buses refill overnight where extra
    demand cannot dent the daytime voltage profile."""
    g = boxes.heuristic_seed()
    d = boxes.unflatten(g)
    irr = config.weather.irradiance
    alpha = config.market_price
    lo = config.mu1 * alpha
    hi = config.mu2 * alpha
    day = irr >= config.sigma
    day_idx = np.where(day)[0]
    gamma = lo.copy()
    d.ev_fraction[:] = 1.0
    d.batt_fraction[:] = 1.0
    if day_idx.size >= 4:
        dusk = list(day_idx[-3:])
        window = [int(t) for t in day_idx[:-3]]
        evicted = []
        while len(window) > 1:
            level = max(lo[t] for t in window)
            if level <= min(hi[t] for t in window) + 1e-12:
                break
            evicted.append(max(window, key=lambda t: lo[t]))
            window.remove(evicted[-1])
        level = max(lo[t] for t in window)
        for t in window:
            gamma[t] = level
        for k, t in enumerate(dusk):
            gamma[t] = np.clip(level + 0.003 * (k + 1), lo[t], hi[t])
        if evicted:
            # chargers arriving on an evicted interval defer into the
            # window; a rising dispatch-fraction ramp meters them out a
            # little per interval rather than in one burst
            ramp = window[1:] + dusk[:1]
            for j, t in enumerate(ramp):
                f = 0.70 + 0.23 * j / max(1, len(ramp) - 1)
                d.ev_fraction[:, t] = f
    d.incentive_price[:] = np.clip(gamma, lo, hi)

    # electrically stiff stations can absorb a charging pile without
    # denting the feeder minimum, so their morning arrivals are held back
    # (zero charge budget) until the solar plateau, where every delivered
    # kWh is cheapest to move; weak stations keep charging on arrival
    der_sens = voltage_sensitivity(config)
    stiff_der = der_sens < 0.25 * np.median(der_sens)
    plateau = int(np.argmin(alpha))
    if stiff_der.any() and day[plateau]:
        release = [t for t in range(plateau, int(day_idx[-1]))
                   if alpha[t] <= alpha[plateau] + 0.0035]
        for nd in np.where(stiff_der)[0]:
            d.ev_fraction[nd, max(0, day_idx[0] - 1):plateau] = 0.5
            # meter the held chargers back out across the plateau so the
            # pile never outruns even a stiff bus's voltage slack
            for j, t in enumerate(release):
                d.ev_fraction[nd, t] = 0.58 + 0.42 * j / max(1, len(release) - 1)

    pricey = alpha >= np.quantile(alpha, 0.75)
    cand = np.where(~day & ~pricey)[0]
    cand = cand[np.argsort(alpha[cand])][:max(1, (3 * cand.size) // 4)]
    night_cols = np.zeros_like(pricey)
    night_cols[cand] = True
    load_sens = voltage_sensitivity(config, config.load_positions)
    stiff_load = load_sens < 0.5 * np.median(load_sens)
    x = np.zeros_like(boxes.x_upper)
    for i in range(x.shape[0]):
        depth = 0.5 if stiff_load[i] else 0.3
        x[i, pricey] = depth * boxes.x_upper[i, pricey]
        cols = night_cols
        if not cols.any():
            cols = ~pricey
        room = -boxes.x_lower[i, cols]
        total_room = float(room.sum())
        shaved = float(x[i].sum())
        if shaved > total_room:
            x[i] *= total_room / max(shaved, 1e-12)
        x[i, cols] -= room * (float(x[i].sum())
                              / max(total_room, 1e-12))
    g = boxes.flatten(d)
    g[boxes.slices[4]] = x.ravel()
    return g


def init_population(config, boxes, rng, seeds=()):
    """Uniform random genomes plus the greedy-charge heuristic seed (and
    any extra seeds supplied by the caller)."""
    n = config.population
    pop = rng.uniform(boxes.lower, boxes.upper, size=(n, boxes.size))
    pop[0] = boxes.heuristic_seed()
    for j, s in enumerate(seeds):
        if 1 + j < n:
            pop[1 + j] = s
    for i in range(n):
        pop[i] = repair(pop[i], boxes)
    return pop


def jaya_step(population, fitnesses, rng, boxes=None, elitism=2):
    """Propose one Jaya move per candidate (elite candidates excluded).

    Proposals are repaired when `boxes` is given; acceptance is the
    caller's job (greedy, against fresh fitness evaluations).
    """
    pop = np.asarray(population, float)
    fit = np.asarray(fitnesses, float)
    best = pop[np.argmin(fit)]
    worst = pop[np.argmax(fit)]
    order = np.argsort(fit, kind="stable")
    elite = set(int(i) for i in order[:max(0, elitism)])
    out = pop.copy()
    for i in range(pop.shape[0]):
        if i in elite:
            continue
        r1 = rng.random(pop.shape[1])
        r2 = rng.random(pop.shape[1])
        cand = pop[i] + r1 * (best - np.abs(pop[i])) \
            - r2 * (worst - np.abs(pop[i]))
        out[i] = repair(cand, boxes) if boxes is not None else cand
    return out


# ---------------------------------------------------------------------------
# fitness evaluation across concentrations
# ---------------------------------------------------------------------------

@dataclass
class EvaluationContext:
    config: object
    boxes: GenomeBoxes
    fleets: list          # CompiledFleet per concentration
    weights: np.ndarray   # concentration weights, sum 1
    prices: PriceSchedule
    bounds: UtopiaBounds
    penalty_coeff: float = 1e3
    mean_index: int = -1  # fleet evaluated for the reported violations
    _vmin_cache: dict = field(default_factory=dict)


def _simulate(ctx, decision, fleet, uncontrolled=False):
    return sc_mod.simulate_schedule(ctx.config, fleet, decision,
                                    uncontrolled=uncontrolled)


def baseline_voltage_min(ctx, decision, fleet):
    """Per-interval minimum voltage of the uncontrolled run, cached by
    solar capacity (the only decision input the baseline responds to)."""
    key = (id(fleet), decision.solar_capacity_kwp.tobytes())
    vmin = ctx._vmin_cache.get(key)
    if vmin is None:
        vmin = _simulate(ctx, decision, fleet, uncontrolled=True).voltage_min
        if len(ctx._vmin_cache) > 4096:
            ctx._vmin_cache.clear()
        ctx._vmin_cache[key] = vmin
    return vmin


def _fleet_fitness(ctx, decision, fleet):
    state = _simulate(ctx, decision, fleet)
    obj = evaluate_objectives(state)
    report = evaluate_constraints(
        state, ctx.prices, ctx.config.solar_capacity_max_kwp,
        ctx.boxes.x_upper, ctx.boxes.x_lower, sigma=ctx.config.sigma,
        v_min=ctx.config.v_min, v_max=ctx.config.v_max,
        baseline_vmin=baseline_voltage_min(ctx, decision, fleet))
    norm = normalize_vector(obj, ctx.bounds)
    fit = penalized_fitness(norm, ctx.config.weights, report,
                            ctx.penalty_coeff)
    return fit, report, obj, state


def evaluate_genome(ctx, genome):
    """Concentration-weighted penalized fitness of one genome.

    Returns (fitness, violation total at the all-means fleet).
    """
    decision = ctx.boxes.unflatten(genome)
    total = 0.0
    viol = 0.0
    for k, fleet in enumerate(ctx.fleets):
        fit, report, _, _ = _fleet_fitness(ctx, decision, fleet)
        total += ctx.weights[k] * fit
        if k == ctx.mean_index % len(ctx.fleets):
            viol = report.total()
    return total, viol


def preferred(f_new, v_new, f_old, v_old, tol=1e-9):
    """Feasibility-first candidate ordering: a feasible candidate always
    beats an infeasible one, two infeasible candidates compare on total
    violation, and two feasible ones on fitness."""
    new_ok = v_new <= tol
    old_ok = v_old <= tol
    if new_ok and old_ok:
        return f_new < f_old
    if new_ok != old_ok:
        return new_ok
    return v_new < v_old


def _incumbent(fits, viols, tol=1e-9):
    best = 0
    for i in range(1, len(fits)):
        if preferred(fits[i], viols[i], fits[best], viols[best], tol):
            best = i
    return best


# ---------------------------------------------------------------------------
# utopia bounds
# ---------------------------------------------------------------------------

def single_objective_bounds(config, optimizer_budget=None):
    """Per-objective numeric (min, max) bounds from five single-objective
    searches on the all-means fleet.

    `optimizer_budget` is a (population, iterations) pair; defaults come
    from the scenario's optimizer settings.
    """
    settings = config.optimizer
    if optimizer_budget is None:
        pop_n, iters = settings.utopia_population, settings.utopia_iterations
    else:
        pop_n, iters = optimizer_budget
    boxes = GenomeBoxes(config)
    fleet = sc_mod.compile_fleet(config,
                                 sc_mod.sample_fleet(config, settings.seed))
    prices = config.price_schedule(np.zeros(config.t_slots))
    signs = np.array([-1.0, 1.0, 1.0, 1.0, 1.0])  # F1 is maximized

    vmin_cache = {}

    def raw_eval(genome, idx):
        decision = boxes.unflatten(genome)
        state = sc_mod.simulate_schedule(config, fleet, decision)
        key = decision.solar_capacity_kwp.tobytes()
        base_vmin = vmin_cache.get(key)
        if base_vmin is None:
            base_vmin = sc_mod.simulate_schedule(
                config, fleet, decision, uncontrolled=True).voltage_min
            vmin_cache[key] = base_vmin
        obj = evaluate_objectives(state)
        report = evaluate_constraints(
            state, prices, config.solar_capacity_max_kwp,
            boxes.x_upper, boxes.x_lower, sigma=config.sigma,
            v_min=config.v_min, v_max=config.v_max,
            baseline_vmin=base_vmin)
        pen = sum((v / (report.scales.get(k, 1.0) or 1.0)) ** 2
                  for k, v in report.violations.items())
        arr = obj.as_array()
        scale = max(1.0, abs(arr[idx]))
        return signs[idx] * arr[idx] + settings.penalty_coeff * pen * scale, \
            arr

    optima = np.empty((5, 5))
    for idx in range(5):
        rng = np.random.default_rng(settings.seed + 1000 + idx)
        pop = init_population(settings, boxes, rng)
        pop = pop[:pop_n] if pop_n <= pop.shape[0] else pop
        vals = []
        objs = []
        for g in pop:
            v, arr = raw_eval(g, idx)
            vals.append(v)
            objs.append(arr)
        vals = np.array(vals)
        for _ in range(iters):
            cand = jaya_step(pop, vals, rng, boxes=boxes,
                             elitism=settings.elitism)
            for i in range(pop.shape[0]):
                if np.array_equal(cand[i], pop[i]):
                    continue
                v, arr = raw_eval(cand[i], idx)
                if v < vals[i]:
                    pop[i] = cand[i]
                    vals[i] = v
                    objs[i] = arr
        optima[idx] = objs[int(np.argmin(vals))]

    lower = optima.min(axis=0)
    upper = optima.max(axis=0)
    width = np.maximum(upper - lower, 0.0)
    pad = np.maximum(1e-6, 1e-3 * np.maximum(np.abs(lower), np.abs(upper)))
    narrow = width < pad
    lower = np.where(narrow, lower - pad, lower)
    upper = np.where(narrow, upper + pad, upper)
    # the payoff-table runs only estimate the per-objective extremes; pad
    # the interval so the main search rarely leaves it, since clamped
    # normalization would zero the gradient of any objective that does
    width = upper - lower
    return UtopiaBounds(lower - 0.25 * width, upper + 0.25 * width)


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    decision: DecisionVector
    fitness: float
    trace: list                    # (iteration, best, mean, violations)
    bounds: UtopiaBounds
    report: object                 # ScheduleReport (controlled)
    baseline_report: object        # ScheduleReport (uncontrolled)
    feasible: bool
    violations: dict = field(default_factory=dict)


def _build_fleets(config, seed, deterministic):
    """(fleets, weights, mean_index, concentrations) for the run."""
    base = sc_mod.compile_fleet(config, sc_mod.sample_fleet(config, seed))
    active = [v for v in config.uncertainty if v.std > 0]
    if deterministic or not active:
        return [base], np.array([1.0]), 0, []
    concs = stochastic.pem_concentrations(active)
    fleets = []
    for c in concs:
        if not c.variable:
            fleets.append(base)
            continue
        offsets = {c.variable: c.location}
        fleets.append(sc_mod.compile_fleet(
            config, sc_mod.sample_fleet(config, seed, offsets)))
    weights = np.array([c.weight for c in concs])
    return fleets, weights, len(concs) - 1, concs


def _summary_stats(ctx, decision, uncontrolled, mc_samples=0, mc_seed=0):
    """Mean/std of the per-day report quantities across the uncertainty
    set (PEM weights, or Monte Carlo when mc_samples > 0)."""
    cfg = ctx.config

    def quantities(fleet):
        state = _simulate(ctx, decision, fleet, uncontrolled=uncontrolled)
        q = sc_mod.report_quantities(state, use_incentive=not uncontrolled)
        if uncontrolled:
            q[-1] = 0.0
        else:
            fit, _, _, _ = _fleet_fitness(ctx, decision, fleet)
            q[-1] = fit
        return q

    if mc_samples > 0:
        active = [v for v in cfg.uncertainty if v.std > 0]

        def evaluator(values):
            fleet = sc_mod.compile_fleet(
                cfg, sc_mod.sample_fleet(cfg, cfg.optimizer.seed, values))
            return quantities(fleet)

        mean, std = stochastic.monte_carlo_oracle(
            active, evaluator, mc_samples, rng_seed=mc_seed)
    else:
        acc1 = np.zeros(len(sc_mod.REPORT_KEYS))
        acc2 = np.zeros(len(sc_mod.REPORT_KEYS))
        for k, fleet in enumerate(ctx.fleets):
            q = quantities(fleet)
            acc1 += ctx.weights[k] * q
            acc2 += ctx.weights[k] * q * q
        mean = acc1
        std = np.sqrt(np.maximum(acc2 - acc1 ** 2, 0.0))
    return {key: (float(mean[i]), float(std[i]))
            for i, key in enumerate(sc_mod.REPORT_KEYS)}


def _assemble_report(ctx, decision, uncontrolled, mc_samples=0):
    fleet = ctx.fleets[ctx.mean_index % len(ctx.fleets)]
    state = _simulate(ctx, decision, fleet, uncontrolled=uncontrolled)
    obj = evaluate_objectives(state)
    report = evaluate_constraints(
        state, ctx.prices, ctx.config.solar_capacity_max_kwp,
        ctx.boxes.x_upper, ctx.boxes.x_lower, sigma=ctx.config.sigma,
        v_min=ctx.config.v_min, v_max=ctx.config.v_max,
        baseline_vmin=None if uncontrolled
        else baseline_voltage_min(ctx, decision, fleet))
    stats = _summary_stats(ctx, decision, uncontrolled,
                           mc_samples=mc_samples)
    objectives = {
        "f1_profit": obj.f1_profit, "f2_capex": obj.f2_capex,
        "f3_dr_cost": obj.f3_dr_cost, "f4_undesirable": obj.f4_undesirable,
        "f5_grid_cost": obj.f5_grid_cost,
    }
    feasible = uncontrolled or report.is_feasible()
    return sc_mod.build_report(state, stats, objectives, feasible=feasible,
                               violations=dict(report.violations)), state


def write_trace(trace, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "best_fitness", "mean_fitness", "violations"])
        for row in trace:
            w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3])])


def run(config, settings=None, seed=None, deterministic=False,
        mc_samples=0, baseline_only=False, out_dir=None, fmt="both",
        step_fn=jaya_step, progress=None):
    """Optimize the day-ahead schedule and assemble controlled and
    uncontrolled reports.

    Returns a RunResult; `result.feasible` is False when the best schedule
    still violates constraints above tolerance (callers wanting an
    exception can raise InfeasibleBest(result)).
    """
    settings = settings or config.optimizer
    seed = settings.seed if seed is None else seed
    boxes = GenomeBoxes(config)
    fleets, weights, mean_index, _ = _build_fleets(config, seed,
                                                   deterministic)
    prices = config.price_schedule(np.zeros(config.t_slots))

    if baseline_only:
        bounds = UtopiaBounds(np.zeros(5), np.ones(5))
        ctx = EvaluationContext(config, boxes, fleets, weights, prices,
                                bounds, settings.penalty_coeff, mean_index)
        decision = boxes.unflatten(boxes.heuristic_seed())
        baseline, _ = _assemble_report(ctx, decision, uncontrolled=True,
                                       mc_samples=mc_samples)
        result = RunResult(decision, float("nan"), [], bounds,
                           baseline, baseline, True, {})
        if out_dir:
            sc_mod.export_report(baseline, fmt, out_dir, prefix="baseline")
        return result

    bounds = single_objective_bounds(config)
    ctx = EvaluationContext(config, boxes, fleets, weights, prices,
                            bounds, settings.penalty_coeff, mean_index)

    rng = np.random.default_rng(seed)
    steer = price_steering_seed(config, boxes)
    # a small cloud of copies with proportionally shrunk curtailment
    # programs anchors the search basin around the structured start;
    # scaling a bus's whole row keeps its daily shed/refill balance at
    # zero, and pricing and dispatch fractions are left alone so the
    # quote ties that keep charging at arrival survive in every copy
    sl = boxes.slices[4]
    n_rows = boxes.x_upper.shape[0]
    cloud = []
    for _ in range(7):
        s = steer.copy()
        scale = rng.uniform(0.9, 1.0, size=(n_rows, 1))
        s[sl] = (s[sl].reshape(n_rows, -1) * scale).ravel()
        cloud.append(s)
    pop = init_population(settings, boxes, rng,
                          seeds=(steer, *cloud))
    fits = np.empty(pop.shape[0])
    viols = np.empty(pop.shape[0])
    for i in range(pop.shape[0]):
        fits[i], viols[i] = evaluate_genome(ctx, pop[i])

    trace = []
    b = _incumbent(fits, viols)
    trace.append((0, float(fits[b]), float(fits.mean()), float(viols[b])))
    for it in range(1, settings.iterations + 1):
        cand = step_fn(pop, fits, rng, boxes=boxes,
                       elitism=settings.elitism)
        for i in range(pop.shape[0]):
            if np.array_equal(cand[i], pop[i]):
                continue
            f, v = evaluate_genome(ctx, cand[i])
            if preferred(f, v, fits[i], viols[i]):
                pop[i] = cand[i]
                fits[i] = f
                viols[i] = v
        b = _incumbent(fits, viols)
        trace.append((it, float(fits[b]), float(fits.mean()),
                      float(viols[b])))
        if progress is not None:
            progress(it, float(fits[b]))

    best = pop[_incumbent(fits, viols)]
    decision = ctx.boxes.unflatten(best)
    report, _ = _assemble_report(ctx, decision, uncontrolled=False,
                                 mc_samples=mc_samples)
    baseline, _ = _assemble_report(ctx, decision, uncontrolled=True,
                                   mc_samples=mc_samples)
    result = RunResult(decision, float(fits[_incumbent(fits, viols)]),
                       trace, bounds,
                       report, baseline, report.feasible,
                       dict(report.violations))
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        sc_mod.export_report(report, fmt, out_dir, prefix="schedule")
        sc_mod.export_report(baseline, fmt, out_dir, prefix="baseline")
        write_trace(trace, os.path.join(out_dir, "convergence.csv"))
    return result
