"""Radial distribution feeder model and AC power flow.

Internal math is in per-unit (base MVA 1, base kV configurable, 12.66 kV
default); inputs and outputs at the module boundary are kW/kvar.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import engine


class NetworkError(ValueError):
    """Invalid feeder description."""


class NonConvergence(RuntimeError):
    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"power flow did not converge in {iterations} iterations "
            f"(max mismatch {residual:.3e} pu)")


class SingularJacobian(RuntimeError):
    """The Jacobian block elimination hit a zero pivot."""


@dataclass(frozen=True)
class Bus:
    id: int
    base_load_p: float = 0.0   # kW
    base_load_q: float = 0.0   # kvar
    kind: str = "load"         # "slack" | "load"


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    resistance: float   # ohm
    reactance: float    # ohm


@dataclass
class PowerFlowSolution:
    voltage_mag: np.ndarray    # per-unit, indexed by bus position
    voltage_ang: np.ndarray    # radians
    total_loss: float          # kW
    slack_injection: float     # kW
    iterations: int = 0
    bus_ids: np.ndarray = field(default_factory=lambda: np.empty(0, int))


class Feeder:
    """Validated radial feeder with precomputed solver structures."""

    def __init__(self, buses, lines, base_kv=12.66, base_mva=1.0):
        self.buses = list(buses)
        self.lines = list(lines)
        self.base_kv = base_kv
        self.base_mva = base_mva
        self._validate()
        self._build()

    def _validate(self):
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise NetworkError("bus ids must be unique")
        if sorted(ids) != list(range(min(ids), min(ids) + len(ids))):
            raise NetworkError("bus ids must be contiguous")
        slacks = [b for b in self.buses if b.kind == "slack"]
        if len(slacks) != 1:
            raise NetworkError("exactly one slack bus required")
        if len(self.lines) != len(self.buses) - 1:
            raise NetworkError("radial feeder needs N-1 lines")
        for ln in self.lines:
            if ln.resistance < 0:
                raise NetworkError(f"negative resistance on line "
                                   f"{ln.from_bus}-{ln.to_bus}")

    def _build(self):
        n = len(self.buses)
        self.n_bus = n
        self.bus_ids = np.array([b.id for b in self.buses])
        pos = {b.id: i for i, b in enumerate(self.buses)}
        self.slack = next(i for i, b in enumerate(self.buses)
                          if b.kind == "slack")
        z_base = self.base_kv ** 2 / self.base_mva

        y_diag = np.zeros(n, complex)
        neighbors: list[dict[int, complex]] = [dict() for _ in range(n)]
        for ln in self.lines:
            i, j = pos[ln.from_bus], pos[ln.to_bus]
            z = (ln.resistance + 1j * ln.reactance) / z_base
            if z == 0:
                raise NetworkError(f"zero-impedance line "
                                   f"{ln.from_bus}-{ln.to_bus}")
            y = 1.0 / z
            y_diag[i] += y
            y_diag[j] += y
            neighbors[i][j] = neighbors[i].get(j, 0) - y
            neighbors[j][i] = neighbors[j].get(i, 0) - y

        ptr = np.zeros(n + 1, np.int64)
        idx, gval, bval = [], [], []
        for i in range(n):
            for j, y in sorted(neighbors[i].items()):
                idx.append(j)
                gval.append(y.real)
                bval.append(y.imag)
            ptr[i + 1] = len(idx)
        self._adj_ptr = ptr
        self._adj_idx = np.array(idx, np.int64)
        self._adj_g = np.array(gval)
        self._adj_b = np.array(bval)
        self._diag_g = y_diag.real.copy()
        self._diag_b = y_diag.imag.copy()

        # BFS tree from the slack; elimination order = deepest buses first
        parent = np.full(n, -1, np.int64)
        depth = np.full(n, -1, np.int64)
        depth[self.slack] = 0
        queue = [self.slack]
        while queue:
            i = queue.pop(0)
            for j in neighbors[i]:
                if depth[j] < 0:
                    depth[j] = depth[i] + 1
                    parent[j] = i
                    queue.append(j)
        if (depth < 0).any():
            raise NetworkError("feeder graph is not connected")
        order = [i for i in range(n) if i != self.slack]
        order.sort(key=lambda i: -depth[i])
        self._parent = parent
        self._elim_order = np.array(order, np.int64)

        self.base_load_p = np.array([b.base_load_p for b in self.buses])
        self.base_load_q = np.array([b.base_load_q for b in self.buses])
        self._pos = pos

    def position(self, bus_id):
        return self._pos[bus_id]

    def solve(self, net_injections_kw, net_injections_kvar,
              tol=1e-8, max_iter=20):
        """Single power flow; injections indexed by bus position, kW/kvar,
        generation positive."""
        sol = self.solve_series(np.asarray(net_injections_kw)[None, :],
                                np.asarray(net_injections_kvar)[None, :],
                                tol=tol, max_iter=max_iter)
        return sol[0]

    def solve_series(self, p_kw, q_kvar, tol=1e-8, max_iter=20):
        """One power flow per row; returns a list of PowerFlowSolution."""
        p_kw = np.atleast_2d(np.asarray(p_kw, float))
        q_kvar = np.atleast_2d(np.asarray(q_kvar, float))
        if tol <= 0:
            raise ValueError("tol must be positive")
        s_base_kw = self.base_mva * 1000.0
        status, iters, vm, va, loss, slack_p, _ = engine.pf_solve_series(
            self._diag_g, self._diag_b, self._adj_ptr, self._adj_idx,
            self._adj_g, self._adj_b, self._parent, self._elim_order,
            self.slack, p_kw / s_base_kw, q_kvar / s_base_kw,
            tol, max_iter)
        out = []
        for t in range(p_kw.shape[0]):
            if status[t] == engine.PF_SINGULAR:
                raise SingularJacobian(f"singular Jacobian at row {t}")
            if status[t] != engine.PF_OK:
                raise NonConvergence(int(iters[t]), float(np.max(np.abs(
                    p_kw[t]))) / s_base_kw)
            out.append(PowerFlowSolution(
                voltage_mag=vm[t], voltage_ang=va[t],
                total_loss=float(loss[t] * s_base_kw),
                slack_injection=float(slack_p[t] * s_base_kw),
                iterations=int(iters[t]), bus_ids=self.bus_ids))
        return out


def solve_power_flow(buses, lines, net_injections_kw, net_injections_kvar,
                     tol=1e-8, max_iter=20, base_kv=12.66, base_mva=1.0):
    """Newton-Raphson power flow on a radial feeder.

    Injections are net (generation minus load) in kW/kvar, ordered like
    `buses`.  Raises NonConvergence / SingularJacobian on failure.
    """
    feeder = Feeder(buses, lines, base_kv=base_kv, base_mva=base_mva)
    return feeder.solve(net_injections_kw, net_injections_kvar,
                        tol=tol, max_iter=max_iter)


def check_voltage_limits(solutions, v_min, v_max):
    """Return (bus_id, interval, |V|) for every voltage outside the band.

    Accepts a single solution or a sequence (one per interval).
    """
    if isinstance(solutions, PowerFlowSolution):
        solutions = [solutions]
    violations = []
    for t, sol in enumerate(solutions):
        for i, v in enumerate(sol.voltage_mag):
            if v < v_min or v > v_max:
                bus = int(sol.bus_ids[i]) if sol.bus_ids.size else i
                violations.append((bus, t, float(v)))
    return violations


def load_feeder_csv(path, base_kv=12.66, base_mva=1.0):
    """Read a feeder from CSV `from,to,r_ohm,x_ohm,p_kw,q_kvar`.

    Load columns attach to the `to` bus; the bus that never appears as a
    `to` bus is the slack.
    """
    lines = []
    loads = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            f, t = int(row["from"]), int(row["to"])
            lines.append(Line(f, t, float(row["r_ohm"]), float(row["x_ohm"])))
            loads[t] = (float(row["p_kw"]), float(row["q_kvar"]))
    ids = sorted({ln.from_bus for ln in lines} | {ln.to_bus for ln in lines})
    to_ids = {ln.to_bus for ln in lines}
    buses = []
    for i in ids:
        p, q = loads.get(i, (0.0, 0.0))
        kind = "load" if i in to_ids else "slack"
        buses.append(Bus(i, p, q, kind))
    return Feeder(buses, lines, base_kv=base_kv, base_mva=base_mva)
