"""Power network: converters, battery, PSM loads and the per-tick solve.

Every fixed timestep the network aggregates load demand at each rail,
passes it through the two-level converter tree (rail converters feed the
regulated bus, one converter feeds the bus from the battery), solves the
battery operating point from the demanded power, and integrates state of
charge by coulomb counting.

The battery solve is `i * (voc - i*rs) = p`, taking the smaller (physical)
root. Long steady-load windows are integrated tick-by-tick in a compiled
loop (numba) with the exact same arithmetic as the scalar path; a pure
Python fallback is kept for environments without numba and for
cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .common import SimulationError, ns_to_s

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


class PowerNetError(SimulationError):
    """Base class for power-network failures."""


class MaxPowerExceeded(PowerNetError):
    """Demand beyond the battery's maximum transferable power."""


class UnknownState(PowerNetError):
    """A PSM was switched to a state it does not define."""


def _interp_clamped_impl(x, xs, ys):
    """Piecewise-linear interpolation, clamped to the end values.

    Works on numpy arrays (compiled fast path) and plain tuples (scalar
    path) with bit-identical arithmetic.
    """
    n = len(xs)
    if x <= xs[0]:
        return ys[0]
    if x >= xs[n - 1]:
        return ys[n - 1]
    j = 1
    while xs[j] < x:
        j += 1
    x0 = xs[j - 1]
    y0 = ys[j - 1]
    return y0 + (x - x0) * (ys[j] - y0) / (xs[j] - x0)


def _window_loop_impl(
    soc,
    p_demand,
    dt_s,
    n_ticks,
    voc_soc,
    voc_v,
    rs_soc,
    rs_ohm,
    capacity_c,
    emit_every,
    emit_phase,
    out_i,
    out_v,
    out_soc,
):
    """Tick-by-tick battery integration over a constant-demand window.

    Returns (status, ticks_done, soc, charge_c, n_emitted) with status
    0 = completed, 1 = battery depleted at tick `ticks_done`, 2 = demand
    above the maximum transferable power (the failing tick not performed).
    """
    charge = 0.0
    emitted = 0
    ticks = 0
    status = 0
    for _k in range(n_ticks):
        voc = _interp(soc, voc_soc, voc_v)
        rs = _interp(soc, rs_soc, rs_ohm)
        if p_demand <= 0.0:
            i = 0.0
            v_term = voc
        elif rs == 0.0:
            i = p_demand / voc
            v_term = voc
        else:
            disc = voc * voc - 4.0 * rs * p_demand
            if disc < 0.0:
                status = 2
                break
            i = (voc - math.sqrt(disc)) / (2.0 * rs)
            v_term = voc - i * rs
        soc = soc - i * dt_s / capacity_c
        if soc < 0.0:
            soc = 0.0
        charge += i * dt_s
        ticks += 1
        if emit_every > 0 and (emit_phase + ticks) % emit_every == 0:
            out_i[emitted] = i
            out_v[emitted] = v_term
            out_soc[emitted] = soc
            emitted += 1
        if soc == 0.0:
            status = 1
            break
    return status, ticks, soc, charge, emitted


if _HAVE_NUMBA:
    _interp = njit(cache=True)(_interp_clamped_impl)
    _window_loop = njit(cache=True)(_window_loop_impl)
else:  # pragma: no cover
    _interp = _interp_clamped_impl
    _window_loop = _window_loop_impl


def interp_clamped(x: float, xs: np.ndarray, ys: np.ndarray) -> float:
    """Scalar clamped linear interpolation (same arithmetic as the fast path)."""
    return float(_interp_clamped_impl(float(x), xs, ys))


def _as_curve(xs, ys, name: str, x_label: str) -> tuple[np.ndarray, np.ndarray]:
    xa = np.asarray(xs, dtype=np.float64)
    ya = np.asarray(ys, dtype=np.float64)
    if xa.ndim != 1 or xa.shape != ya.shape:
        raise ValueError(f"{name}: {x_label} and values must be 1-D and the same length")
    if xa.shape[0] < 2:
        raise ValueError(f"{name}: needs at least 2 points")
    if not np.all(np.diff(xa) > 0):
        raise ValueError(f"{name}: {x_label} must be strictly increasing")
    return np.ascontiguousarray(xa), np.ascontiguousarray(ya)


class EfficiencyLUT:
    """Converter efficiency vs. output current, linearly interpolated.

    Queries outside the measured range clamp to the end values; synthetic
    extrapolation of efficiencies is never performed.
    """

    def __init__(self, i_out_a, eta, name: str = "lut"):
        self.name = name
        self.i_out_a, self.eta = _as_curve(i_out_a, eta, name, "i_out_a")
        if self.i_out_a[0] < 0:
            raise ValueError(f"{name}: currents must be >= 0")
        if np.any(self.eta <= 0) or np.any(self.eta > 1):
            raise ValueError(f"{name}: efficiencies must be in (0, 1]")
        # Plain-float copies keep the scalar path off numpy boxing.
        self._xs = tuple(float(v) for v in self.i_out_a)
        self._ys = tuple(float(v) for v in self.eta)

    def efficiency(self, i_out_a: float) -> float:
        if i_out_a < 0:
            raise ValueError(f"{self.name}: output current must be >= 0, got {i_out_a}")
        return _interp_clamped_impl(i_out_a, self._xs, self._ys)


class DcDcConverter:
    """A DC/DC converter modeled as an output-current-dependent efficiency."""

    PLACEMENTS = ("battery_to_bus", "bus_to_rail")

    def __init__(self, name: str, v_out: float, lut: EfficiencyLUT, placement: str):
        if v_out <= 0:
            raise ValueError(f"converter {name}: v_out must be > 0, got {v_out}")
        if placement not in self.PLACEMENTS:
            raise ValueError(f"converter {name}: unknown placement {placement!r}")
        self.name = name
        self.v_out = v_out
        self.lut = lut
        self.placement = placement

    def efficiency_at(self, p_out_w: float) -> float:
        return self.lut.efficiency(p_out_w / self.v_out)

    def input_power(self, p_out_w: float) -> float:
        """Power drawn at the converter input to deliver `p_out_w`."""
        if p_out_w < 0:
            raise ValueError(f"converter {self.name}: output power must be >= 0")
        if p_out_w == 0.0:
            return 0.0
        return p_out_w / self.efficiency_at(p_out_w)


class Battery:
    """Charge store with SoC-dependent open-circuit voltage and series resistance.

    The discharge non-linearity comes entirely from rs(soc) rising toward
    low state of charge; RC transient pairs are an extension point and not
    modeled.
    """

    def __init__(self, capacity_coulomb: float, voc_soc, voc_v, rs_soc, rs_ohm, soc: float = 1.0):
        if capacity_coulomb <= 0:
            raise ValueError(f"battery capacity must be > 0, got {capacity_coulomb}")
        if not 0.0 <= soc <= 1.0:
            raise ValueError(f"initial soc must be in [0,1], got {soc}")
        self.capacity_coulomb = float(capacity_coulomb)
        self.voc_soc, self.voc_v = _as_curve(voc_soc, voc_v, "battery.voc", "soc")
        self.rs_soc, self.rs_ohm = _as_curve(rs_soc, rs_ohm, "battery.rs", "soc")
        if np.any(self.voc_v <= 0):
            raise ValueError("battery.voc: voltages must be > 0")
        if np.any(self.rs_ohm < 0):
            raise ValueError("battery.rs: resistances must be >= 0")
        self.soc = float(soc)

    def voc(self, soc: float | None = None) -> float:
        return interp_clamped(self.soc if soc is None else soc, self.voc_soc, self.voc_v)

    def rs(self, soc: float | None = None) -> float:
        return interp_clamped(self.soc if soc is None else soc, self.rs_soc, self.rs_ohm)

    @property
    def depleted(self) -> bool:
        return self.soc <= 0.0

    def operating_point(self, p_demand_w: float) -> tuple[float, float]:
        """Discharge current and terminal voltage delivering `p_demand_w`.

        Solves i*(voc - i*rs) = p for the smaller root; rs = 0 degenerates
        to i = p/voc. Raises MaxPowerExceeded when the demand lies beyond
        the battery's maximum transferable power (negative discriminant).
        """
        if p_demand_w < 0:
            raise ValueError(f"power demand must be >= 0, got {p_demand_w}")
        voc = self.voc()
        rs = self.rs()
        if p_demand_w == 0.0:
            return 0.0, voc
        if rs == 0.0:
            return p_demand_w / voc, voc
        disc = voc * voc - 4.0 * rs * p_demand_w
        if disc < 0.0:
            raise MaxPowerExceeded(
                f"demand {p_demand_w:.6g} W exceeds battery max transferable power "
                f"{voc * voc / (4.0 * rs):.6g} W at soc {self.soc:.4f}"
            )
        i = (voc - math.sqrt(disc)) / (2.0 * rs)
        return i, voc - i * rs

    def draw(self, i_a: float, dt_ns: int) -> None:
        """Coulomb-count a discharge of `i_a` over `dt_ns`, flooring soc at 0."""
        if dt_ns <= 0:
            raise ValueError(f"dt must be > 0, got {dt_ns}")
        soc = self.soc - i_a * ns_to_s(dt_ns) / self.capacity_coulomb
        self.soc = soc if soc > 0.0 else 0.0


class Psm:
    """Power state machine: a load whose current draw depends only on its state."""

    def __init__(self, states: dict[str, float], supply_v: float, initial: str):
        if not states:
            raise ValueError("psm needs at least one state")
        for label, i_draw in states.items():
            if i_draw < 0:
                raise ValueError(f"psm state {label}: current must be >= 0, got {i_draw}")
        if supply_v <= 0:
            raise ValueError(f"psm supply voltage must be > 0, got {supply_v}")
        if initial not in states:
            raise UnknownState(f"unknown psm state {initial!r}")
        self.states = dict(states)
        self.supply_v = supply_v
        self.state = initial

    def set_state(self, label: str) -> None:
        if label not in self.states:
            raise UnknownState(f"unknown psm state {label!r}")
        self.state = label

    def power_w(self) -> float:
        return self.states[self.state] * self.supply_v


class PowerBusState:
    """Resolved per-tick power flow from the loads down to the battery.

    Internally tuple-based (this object is built once per power window on
    the hot path); the dict views are for reporting and tests.
    """

    __slots__ = ("v_bus", "total_load_w", "battery_demand_w", "conv_names", "conv_out_t", "conv_in_t", "eta_t", "load_names", "rail_w_t")

    def __init__(self, v_bus, total_load_w, battery_demand_w, conv_names, conv_out_t, conv_in_t, eta_t, load_names, rail_w_t):
        self.v_bus = v_bus
        self.total_load_w = total_load_w
        self.battery_demand_w = battery_demand_w
        self.conv_names = conv_names
        self.conv_out_t = conv_out_t
        self.conv_in_t = conv_in_t
        self.eta_t = eta_t
        self.load_names = load_names
        self.rail_w_t = rail_w_t

    @property
    def rail_w(self) -> dict[str, float]:
        return dict(zip(self.load_names, self.rail_w_t))

    @property
    def conv_out_w(self) -> dict[str, float]:
        return dict(zip(self.conv_names, self.conv_out_t))

    @property
    def conv_in_w(self) -> dict[str, float]:
        return dict(zip(self.conv_names, self.conv_in_t))

    @property
    def eta(self) -> dict[str, float]:
        return dict(zip(self.conv_names, self.eta_t))


@dataclass
class WindowResult:
    """Outcome of integrating one constant-demand window of power ticks."""

    status: str  # "ok" | "depleted" | "max_power"
    ticks_done: int
    soc: float
    charge_c: float
    emit_offsets: list[int] = field(default_factory=list)  # 1-based tick offsets in window
    emit_i: np.ndarray | None = None
    emit_v: np.ndarray | None = None
    emit_soc: np.ndarray | None = None


_STATUS = {0: "ok", 1: "depleted", 2: "max_power"}

_EMPTY = np.empty(0, dtype=np.float64)


class PowerNet:
    """The power bus with its converter tree, battery, and load bindings.

    `loads` maps a component name to the rail feeding it: either "bus"
    (direct at the regulated bus voltage) or the name of a bus_to_rail
    converter. Exactly one battery_to_bus converter links the battery to
    the bus.
    """

    def __init__(
        self,
        v_bus: float,
        battery: Battery,
        converters: dict[str, DcDcConverter],
        loads: dict[str, str],
    ):
        if v_bus <= 0:
            raise ValueError(f"bus voltage must be > 0, got {v_bus}")
        battery_side = [n for n, c in converters.items() if c.placement == "battery_to_bus"]
        if len(battery_side) != 1:
            raise ValueError(f"expected exactly one battery_to_bus converter, got {battery_side}")
        for name, conv in converters.items():
            if conv.placement == "battery_to_bus" and conv.v_out != v_bus:
                raise ValueError(f"converter {name}: battery_to_bus v_out must equal the bus voltage")
        for load, rail in loads.items():
            if rail != "bus":
                conv = converters.get(rail)
                if conv is None or conv.placement != "bus_to_rail":
                    raise ValueError(f"load {load}: rail {rail!r} is not 'bus' or a bus_to_rail converter")
        self.v_bus = v_bus
        self.battery = battery
        self.converters = dict(converters)
        self.loads = dict(loads)
        self.battery_converter = battery_side[0]
        # Routing resolved once: converter order is (rail converters..., battery converter).
        rail_convs = [(n, c) for n, c in converters.items() if c.placement == "bus_to_rail"]
        self._conv_names = tuple(n for n, _ in rail_convs) + (self.battery_converter,)
        self._rail_convs = tuple(c for _, c in rail_convs)
        self._batt_conv = converters[self.battery_converter]
        self._load_names = tuple(loads)
        # Per load: index into the rail-converter list, or -1 for a direct bus load.
        rail_index = {name: idx for idx, (name, _) in enumerate(rail_convs)}
        self._load_route = tuple(rail_index.get(loads[n], -1) for n in self._load_names)
        # Cumulative energy books, kept for conservation checks and summaries.
        self.battery_energy_j = 0.0
        self.conv_in_j = {name: 0.0 for name in converters}
        self.conv_out_j = {name: 0.0 for name in converters}

    def solve_chain(self, load_w: dict[str, float]) -> PowerBusState:
        """Aggregate load demand through the converter tree to the battery.

        Pure function of the load powers; battery state is not touched.
        """
        rail_out = [0.0] * len(self._rail_convs)
        bus_total = 0.0
        rail_w_t = []
        for name, route in zip(self._load_names, self._load_route):
            p = load_w.get(name, 0.0)
            if p < 0:
                raise ValueError(f"load {name}: power must be >= 0, got {p}")
            rail_w_t.append(p)
            if route < 0:
                bus_total += p
            else:
                rail_out[route] += p
        conv_out_t = []
        conv_in_t = []
        eta_t = []
        for conv, p_out in zip(self._rail_convs, rail_out):
            eta = conv.lut.efficiency(p_out / conv.v_out)
            p_in = p_out / eta if p_out > 0.0 else 0.0
            conv_out_t.append(p_out)
            conv_in_t.append(p_in)
            eta_t.append(eta)
            bus_total += p_in
        batt_conv = self._batt_conv
        eta = batt_conv.lut.efficiency(bus_total / batt_conv.v_out)
        demand = bus_total / eta if bus_total > 0.0 else 0.0
        conv_out_t.append(bus_total)
        conv_in_t.append(demand)
        eta_t.append(eta)
        return PowerBusState(
            v_bus=self.v_bus,
            total_load_w=bus_total,
            battery_demand_w=demand,
            conv_names=self._conv_names,
            conv_out_t=tuple(conv_out_t),
            conv_in_t=tuple(conv_in_t),
            eta_t=tuple(eta_t),
            load_names=self._load_names,
            rail_w_t=tuple(rail_w_t),
        )

    def _account(self, state: PowerBusState, window_s: float) -> None:
        self.battery_energy_j += state.battery_demand_w * window_s
        conv_in_j = self.conv_in_j
        conv_out_j = self.conv_out_j
        for name, p_in, p_out in zip(state.conv_names, state.conv_in_t, state.conv_out_t):
            conv_in_j[name] += p_in * window_s
            conv_out_j[name] += p_out * window_s

    def integrate_fast(self, state: PowerBusState, n_ticks: int, tick_ns: int) -> tuple[int, int]:
        """No-trace window integration; returns (status_code, ticks_done).

        Identical per-tick battery arithmetic to `integrate`, minus the
        emission bookkeeping. This is the hot path for hour-scale runs.
        """
        dt_s = tick_ns * 1e-9
        batt = self.battery
        status, ticks, soc, _charge, _n = _window_loop(
            batt.soc,
            state.battery_demand_w,
            dt_s,
            n_ticks,
            batt.voc_soc,
            batt.voc_v,
            batt.rs_soc,
            batt.rs_ohm,
            batt.capacity_coulomb,
            0,
            0,
            _EMPTY,
            _EMPTY,
            _EMPTY,
        )
        batt.soc = soc
        self._account(state, ticks * dt_s)
        return status, ticks

    def integrate(
        self,
        state: PowerBusState,
        n_ticks: int,
        tick_ns: int,
        emit_every: int = 0,
        emit_phase: int = 0,
    ) -> WindowResult:
        """Advance the battery over `n_ticks` ticks of constant demand.

        Each tick re-reads voc/rs at the current soc, solves the operating
        point, and coulomb-counts the drawn charge — identical semantics to
        calling the scalar solve per tick, but in a compiled loop. Trace
        samples are captured at global tick indices divisible by
        `emit_every` (the kernel passes the index phase of the window).
        """
        if n_ticks <= 0:
            raise ValueError(f"n_ticks must be > 0, got {n_ticks}")
        dt_s = ns_to_s(tick_ns)
        if emit_every > 0:
            max_emit = n_ticks // emit_every + 1
            out_i = np.empty(max_emit, dtype=np.float64)
            out_v = np.empty(max_emit, dtype=np.float64)
            out_soc = np.empty(max_emit, dtype=np.float64)
        else:
            out_i = out_v = out_soc = _EMPTY
        batt = self.battery
        status, ticks, soc, charge, emitted = _window_loop(
            batt.soc,
            state.battery_demand_w,
            dt_s,
            n_ticks,
            batt.voc_soc,
            batt.voc_v,
            batt.rs_soc,
            batt.rs_ohm,
            batt.capacity_coulomb,
            emit_every,
            emit_phase,
            out_i,
            out_v,
            out_soc,
        )
        batt.soc = soc
        self._account(state, ticks * dt_s)
        result = WindowResult(
            status=_STATUS[status],
            ticks_done=ticks,
            soc=soc,
            charge_c=charge,
        )
        if emit_every > 0 and emitted:
            first = emit_every - (emit_phase % emit_every)
            result.emit_offsets = list(range(first, first + emitted * emit_every, emit_every))
            result.emit_i = out_i[:emitted]
            result.emit_v = out_v[:emitted]
            result.emit_soc = out_soc[:emitted]
        return result

    def mean_efficiency(self, name: str) -> float:
        """Energy-weighted mean efficiency of a converter over the run so far."""
        e_in = self.conv_in_j[name]
        if e_in == 0.0:
            return 1.0
        return self.conv_out_j[name] / e_in
