"""Static description of a commercial campus and its flexible devices.

Every type below is a frozen dataclass built from plain scalars and tuples,
so instances are deeply immutable, hashable where it matters, and safe to
share between threads. Numeric invariants are *not* enforced in
``__post_init__``: construction always succeeds and :func:`validate` reports
every violated invariant instead. The config loader raises on a non-empty
report; code that mutates models via ``dataclasses.replace`` (tests,
what-if studies) can hold invalid instances and ask for the report.

Conventions
-----------
* time is a grid of equal slots covering one operating day
* power in kW, energy in kWh, heat in kBtu per slot, temperature in degC
* the HVAC power cap is stored as a fraction of the campus base power
  (that is how the capacity is published); everything else is physical
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Iterable

import numpy as np

Matrix3 = tuple[tuple[float, float, float], ...]


def _spectral_radius(m: Matrix3) -> float:
    return float(np.abs(np.linalg.eigvals(np.asarray(m, dtype=float))).max())


@dataclass(frozen=True)
class TimeGrid:
    """One operating day split into equal slots, with a business-hours window."""

    slots_per_day: int = 96
    slot_hours: float = 0.25
    business_start_slot: int = 32   # 08:00 on the default 15-minute grid
    business_end_slot: int = 80     # 20:00

    @property
    def horizon_hours(self) -> float:
        return self.slots_per_day * self.slot_hours

    def is_business(self, slot: int) -> bool:
        return self.business_start_slot <= slot < self.business_end_slot

    def business_slots(self) -> range:
        return range(self.business_start_slot, self.business_end_slot)

    @property
    def n_business(self) -> int:
        return self.business_end_slot - self.business_start_slot


@dataclass(frozen=True)
class ComfortBand:
    """Desired setpoint with a tolerable deviation and a fully-comfortable core.

    ``desired +- epsilon`` is the zone where comfort is 1; comfort ramps
    linearly down to 0 at ``desired +- delta``. Water heaters use
    ``epsilon = 0`` (only the setpoint itself scores 1).
    """

    desired: float
    delta: float
    epsilon: float = 0.0

    @property
    def upper(self) -> float:
        return self.desired + self.delta

    @property
    def lower(self) -> float:
        return self.desired - self.delta


@dataclass(frozen=True)
class HvacParams:
    """Third-order wall/air state-space model of one building's HVAC.

    State ``(indoor, inner_wall, outer_wall)`` evolves as
    ``x' = beta @ x + alpha @ (outdoor, irradiance, mode * cop * power)``;
    the indoor readout is ``gamma @ x``. ``p_max`` is the electrical cap as a
    fraction of the campus base power; ``mode`` is -1 for cooling, +1 for
    heating.
    """

    beta: Matrix3
    alpha: Matrix3
    cop: float
    p_max: float
    band: ComfortBand
    mode: int = -1
    gamma: tuple[float, float, float] = (1.0, 0.0, 0.0)
    initial_state: tuple[float, float, float] = (24.0, 24.0, 26.0)

    def beta_matrix(self) -> np.ndarray:
        return np.asarray(self.beta, dtype=float)

    def alpha_matrix(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=float)

    def p_max_kw(self, p_base: float) -> float:
        return self.p_max * p_base


@dataclass(frozen=True)
class PevParams:
    """Battery limits and owner expectations for one plug-in vehicle."""

    e_min: float            # kWh, deep-discharge floor
    e_max: float            # kWh, pack capacity
    p_charge_max: float     # kW
    e_desired: float        # kWh, owner is fully satisfied at or above this
    e_base: float           # kWh, round-trip commute reserve
    e_init: float           # kWh at the start of the day
    eta_charge: float = 0.98
    degradation_cost: float = 0.0035   # $/kWh charged
    label: str = ""


@dataclass(frozen=True)
class EwhParams:
    """Electric water heater with a daily energy entitlement inside a window."""

    l_max: float                       # kW, maximum electrical draw
    mass: float                        # kg of water in the tank
    band: ComfortBand                  # water temperature comfort band
    window: tuple[int, int]            # [start, end) slots when it may draw
    l_min: float = 0.0                 # kW, minimum draw inside the window
    zeta: float = 1.2                  # power-to-heat ratio
    c_water: float = 4186.0            # J/(kg degC)
    temp_init: float = 30.0            # degC at the start of the day


@dataclass(frozen=True)
class EsParams:
    """Stationary battery: mutually exclusive charge/discharge, cyclic energy."""

    e_min: float = 4.0
    e_max: float = 76.0
    p_charge_max: float = 4.0
    p_discharge_max: float = 4.0
    eta_charge: float = 0.98
    eta_discharge: float = 0.98
    e_init: float = 40.0
    degradation_cost: float = 0.0035   # $/kWh through the converter


@dataclass(frozen=True)
class BoilerParams:
    """Gas boiler feeding the paired water tank and the campus heat balance."""

    h_max: float = 206.0   # kBtu per slot


@dataclass(frozen=True)
class Building:
    """One commercial building and the devices its controller dispatches."""

    hvac: HvacParams
    ewhs: tuple[EwhParams, ...]
    boilers: tuple[BoilerParams, ...]
    storages: tuple[EsParams, ...]
    pev_ids: tuple[int, ...]
    population: int = 100


@dataclass(frozen=True)
class GridMarketParams:
    """Interconnection limit and two-settlement market parameters."""

    g_max: float                          # kW at the point of common coupling
    penalty_cost: float                   # $/kW on day-ahead vs real-time mismatch
    gas_price: tuple[float, ...]          # $/kBtu per slot
    da_sell_ratio: float = 0.8            # day-ahead sell price / buy price

    def gas_price_array(self) -> np.ndarray:
        return np.asarray(self.gas_price, dtype=float)


@dataclass(frozen=True)
class CampusModel:
    """Full static description used by scenario generation and the optimizer."""

    time: TimeGrid
    buildings: tuple[Building, ...]
    pevs: tuple[PevParams, ...]
    grid: GridMarketParams
    p_base: float          # kW, unification base for electric cost terms
    h_base: float          # kBtu, unification base for heat
    solar_capacity: float  # kW installed across all roof-top units

    @property
    def n_solar_units(self) -> int:
        # one roof-top array per building
        return len(self.buildings)

    @property
    def n_ewhs(self) -> int:
        return sum(len(b.ewhs) for b in self.buildings)

    @property
    def n_boilers(self) -> int:
        return sum(len(b.boilers) for b in self.buildings)

    @property
    def n_storages(self) -> int:
        return sum(len(b.storages) for b in self.buildings)

    def pev(self, pev_id: int) -> PevParams:
        return self.pevs[pev_id]


@dataclass(frozen=True)
class Violation:
    """A single broken invariant: where it lives, which rule, and why."""

    path: str
    invariant: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.invariant}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "model valid"
        return "\n".join(str(v) for v in self.violations)


class _Collector:
    def __init__(self):
        self.items: list[Violation] = []

    def check(self, cond: bool, path: str, invariant: str, message: str):
        if not cond:
            self.items.append(Violation(path, invariant, message))


def _validate_band(c: _Collector, band: ComfortBand, path: str):
    c.check(band.delta > 0, path, "delta > 0", f"delta = {band.delta}")
    c.check(
        0 <= band.epsilon < band.delta,
        path,
        "0 <= epsilon < delta",
        f"epsilon = {band.epsilon}, delta = {band.delta}",
    )


def _validate_hvac(c: _Collector, h: HvacParams, path: str):
    c.check(h.gamma == (1.0, 0.0, 0.0), path, "gamma = (1, 0, 0)", f"gamma = {h.gamma}")
    shape_ok = len(h.beta) == 3 and all(len(r) == 3 for r in h.beta)
    c.check(shape_ok, path, "beta is 3x3", f"shape {len(h.beta)} rows")
    if shape_ok:
        rho = _spectral_radius(h.beta)
        c.check(rho < 1.0, path, "spectral radius of beta < 1", f"rho = {rho:.4f}")
    c.check(
        len(h.alpha) == 3 and all(len(r) == 3 for r in h.alpha),
        path, "alpha is 3x3", "wrong shape",
    )
    c.check(h.p_max > 0, path, "p_max > 0", f"p_max = {h.p_max}")
    c.check(h.cop > 0, path, "cop > 0", f"cop = {h.cop}")
    c.check(h.mode in (-1, 1), path, "mode in {-1, +1}", f"mode = {h.mode}")
    _validate_band(c, h.band, path + ".band")


def _validate_pev(c: _Collector, p: PevParams, path: str):
    c.check(
        0 <= p.e_min <= p.e_base < p.e_desired <= p.e_max,
        path,
        "0 <= e_min <= e_base < e_desired <= e_max",
        f"e_min={p.e_min}, e_base={p.e_base}, e_desired={p.e_desired}, e_max={p.e_max}",
    )
    c.check(0 < p.eta_charge <= 1, path, "0 < eta_charge <= 1", f"eta = {p.eta_charge}")
    c.check(
        p.e_min <= p.e_init <= p.e_max,
        path, "e_min <= e_init <= e_max", f"e_init = {p.e_init}",
    )
    c.check(p.p_charge_max > 0, path, "p_charge_max > 0", f"{p.p_charge_max}")
    c.check(p.degradation_cost >= 0, path, "degradation_cost >= 0", f"{p.degradation_cost}")


def _validate_ewh(c: _Collector, w: EwhParams, path: str, time: TimeGrid):
    c.check(0 <= w.l_min <= w.l_max, path, "0 <= l_min <= l_max",
            f"l_min={w.l_min}, l_max={w.l_max}")
    c.check(w.zeta > 0, path, "zeta > 0", f"zeta = {w.zeta}")
    c.check(w.mass > 0, path, "mass > 0", f"mass = {w.mass}")
    c.check(w.c_water > 0, path, "c_water > 0", f"c_water = {w.c_water}")
    a, d = w.window
    c.check(
        0 <= a < d <= time.slots_per_day,
        path, "window within time grid", f"window = {w.window}",
    )
    _validate_band(c, w.band, path + ".band")


def _validate_es(c: _Collector, e: EsParams, path: str):
    c.check(0 <= e.e_min < e.e_max, path, "0 <= e_min < e_max",
            f"e_min={e.e_min}, e_max={e.e_max}")
    for name, eta in (("eta_charge", e.eta_charge), ("eta_discharge", e.eta_discharge)):
        c.check(0 < eta <= 1, path, f"0 < {name} <= 1", f"{name} = {eta}")
    c.check(e.e_min <= e.e_init <= e.e_max, path, "e_min <= e_init <= e_max",
            f"e_init = {e.e_init}")
    c.check(e.p_charge_max > 0 and e.p_discharge_max > 0, path,
            "charge/discharge rates > 0",
            f"p+ = {e.p_charge_max}, p- = {e.p_discharge_max}")


def validate(model: CampusModel) -> ValidationReport:
    """Check every structural invariant; empty report iff the model is valid."""
    c = _Collector()
    t = model.time
    c.check(
        math.isclose(t.slots_per_day * t.slot_hours, 24.0, rel_tol=1e-9),
        "time", "slots_per_day * slot_hours = 24",
        f"{t.slots_per_day} * {t.slot_hours} = {t.slots_per_day * t.slot_hours}",
    )
    c.check(
        0 <= t.business_start_slot < t.business_end_slot <= t.slots_per_day,
        "time", "0 <= business_start < business_end <= slots_per_day",
        f"[{t.business_start_slot}, {t.business_end_slot})",
    )

    c.check(model.p_base > 0, "bases", "p_base > 0", f"p_base = {model.p_base}")
    c.check(model.h_base > 0, "bases", "h_base > 0", f"h_base = {model.h_base}")
    c.check(model.solar_capacity >= 0, "bases", "solar_capacity >= 0",
            f"{model.solar_capacity}")

    g = model.grid
    c.check(g.g_max > 0, "grid", "g_max > 0", f"g_max = {g.g_max}")
    c.check(g.penalty_cost >= 0, "grid", "penalty_cost >= 0", f"{g.penalty_cost}")
    c.check(0 < g.da_sell_ratio <= 1, "grid", "0 < da_sell_ratio <= 1",
            f"{g.da_sell_ratio}")
    c.check(
        len(g.gas_price) == t.slots_per_day,
        "grid", "gas_price has one entry per slot",
        f"{len(g.gas_price)} entries for {t.slots_per_day} slots",
    )
    c.check(all(p >= 0 for p in g.gas_price), "grid", "gas_price >= 0", "negative entry")

    seen: dict[int, int] = {}
    for bi, b in enumerate(model.buildings):
        path = f"buildings[{bi}]"
        c.check(b.population >= 1, path, "population >= 1", f"{b.population}")
        _validate_hvac(c, b.hvac, path + ".hvac")
        for ji, w in enumerate(b.ewhs):
            _validate_ewh(c, w, f"{path}.ewhs[{ji}]", t)
        for ni, e in enumerate(b.storages):
            _validate_es(c, e, f"{path}.storages[{ni}]")
        for hi, hb in enumerate(b.boilers):
            c.check(hb.h_max > 0, f"{path}.boilers[{hi}]", "h_max > 0", f"{hb.h_max}")
        for k in b.pev_ids:
            c.check(
                k not in seen, path, "pev ids disjoint across buildings",
                f"pev {k} also assigned to buildings[{seen.get(k, bi)}]",
            )
            seen.setdefault(k, bi)
            c.check(
                0 <= k < len(model.pevs), path, "pev_id resolves",
                f"pev {k} does not exist (fleet has {len(model.pevs)})",
            )

    assigned = set(seen)
    c.check(
        assigned == set(range(len(model.pevs))),
        "pevs", "every pev resolves to exactly one building",
        f"unassigned: {sorted(set(range(len(model.pevs))) - assigned)}",
    )
    for ki, p in enumerate(model.pevs):
        _validate_pev(c, p, f"pevs[{ki}]")

    return ValidationReport(tuple(c.items))


def building_of_pev(model: CampusModel, pev_id: int) -> int:
    for bi, b in enumerate(model.buildings):
        if pev_id in b.pev_ids:
            return bi
    raise KeyError(f"pev {pev_id} not assigned to any building")
