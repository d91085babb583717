"""Historical day records: loading from CSV and synthetic substitutes.

One day of history is four CSV files, one per correlated series group:

* ``dayNN_prices.csv``        slot, da_buy_price, da_sell_price, rt_price
* ``dayNN_weather.csv``       slot, outdoor_temp, irradiance, solar_01..solar_M
* ``dayNN_demand.csv``        slot, base_load, heat_load,
  ewh_budget_01..ewh_budget_J, ewh_heat_loss_01..ewh_heat_loss_J
* ``dayNN_availability.csv``  slot, pev_01..pev_K  (0/1 values)

Each file has a mandatory header row and exactly one data row per slot.
The per-slot ``ewh_budget`` column records when the day's energy
entitlement (kJ) accrues; only its daily total enters the scheduling model.

The synthetic generator replaces proprietary metered data. It draws
day-level weather/demand/price factors from a seeded RNG and keeps the
physically important couplings: hot days are sunny days, tank heat draw
tracks the campus heat demand, and the electric entitlement of each water
heater covers roughly 45% of its daily heat draw.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import units
from .model import CampusModel, TimeGrid


class HistoryError(ValueError):
    """Raised when historical CSV data does not match the published schema."""


@dataclass(frozen=True, eq=False)
class HistoricalDataset:
    """Aligned day x slot arrays for every uncertain series."""

    time: TimeGrid
    da_buy: np.ndarray        # (days, T) $/kWh
    da_sell: np.ndarray       # (days, T) $/kWh
    rt_price: np.ndarray      # (days, T) $/kWh
    solar: np.ndarray         # (days, M, T) kW per roof-top unit
    outdoor_temp: np.ndarray  # (days, T) degC
    irradiance: np.ndarray    # (days, T) kW/m^2
    base_load: np.ndarray     # (days, T) kW
    heat_load: np.ndarray     # (days, T) kBtu per slot
    ewh_budget: np.ndarray    # (days, J, T) kJ accrual per slot
    ewh_heat_loss: np.ndarray # (days, J, T) kBtu per slot
    availability: np.ndarray  # (days, K, T) 0/1

    def __post_init__(self):
        for f in ("da_buy", "da_sell", "rt_price", "solar", "outdoor_temp",
                  "irradiance", "base_load", "heat_load", "ewh_budget",
                  "ewh_heat_loss", "availability"):
            getattr(self, f).setflags(write=False)

    @property
    def days(self) -> int:
        return self.da_buy.shape[0]

    @property
    def n_solar_units(self) -> int:
        return self.solar.shape[1]

    @property
    def n_ewhs(self) -> int:
        return self.ewh_budget.shape[1]

    @property
    def n_pevs(self) -> int:
        return self.availability.shape[1]


# ---------------------------------------------------------------------------
# CSV schema

GROUPS = ("prices", "weather", "demand", "availability")


def _day_file(directory: Path, day: int, group: str) -> Path:
    return directory / f"day{day:02d}_{group}.csv"


def write_history_csv(data: HistoricalDataset, directory) -> list[Path]:
    """Write one CSV per day per series group; returns the created paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    T = data.time.slots_per_day
    M, J, K = data.n_solar_units, data.n_ewhs, data.n_pevs
    paths = []

    def dump(path, header, columns):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for t in range(T):
                w.writerow([t] + [repr(float(c[t])) for c in columns])
        paths.append(path)

    for d in range(data.days):
        dump(_day_file(directory, d, "prices"),
             ["slot", "da_buy_price", "da_sell_price", "rt_price"],
             [data.da_buy[d], data.da_sell[d], data.rt_price[d]])
        dump(_day_file(directory, d, "weather"),
             ["slot", "outdoor_temp", "irradiance"]
             + [f"solar_{m + 1:02d}" for m in range(M)],
             [data.outdoor_temp[d], data.irradiance[d]]
             + [data.solar[d, m] for m in range(M)])
        dump(_day_file(directory, d, "demand"),
             ["slot", "base_load", "heat_load"]
             + [f"ewh_budget_{j + 1:02d}" for j in range(J)]
             + [f"ewh_heat_loss_{j + 1:02d}" for j in range(J)],
             [data.base_load[d], data.heat_load[d]]
             + [data.ewh_budget[d, j] for j in range(J)]
             + [data.ewh_heat_loss[d, j] for j in range(J)])
        dump(_day_file(directory, d, "availability"),
             ["slot"] + [f"pev_{k + 1:02d}" for k in range(K)],
             [data.availability[d, k] for k in range(K)])
    return paths


def _read_csv(path: Path, slots: int) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise HistoryError(f"{path.name}: empty file") from None
        rows = list(reader)
    if len(rows) != slots:
        raise HistoryError(
            f"{path.name}: ragged day, {len(rows)} data rows for {slots} slots")
    cols = {}
    for ci, name in enumerate(header):
        try:
            cols[name] = np.array([float(r[ci]) for r in rows])
        except (ValueError, IndexError):
            raise HistoryError(f"{path.name}: non-numeric or missing value "
                               f"in column {name!r}") from None
    return cols


def _pick(cols, name, path):
    if name not in cols:
        raise HistoryError(f"{path.name}: missing column {name!r}")
    return cols[name]


def _numbered(cols, prefix, path):
    names = sorted(n for n in cols if n.startswith(prefix))
    if not names:
        raise HistoryError(f"{path.name}: missing column(s) {prefix!r}*")
    expect = [f"{prefix}{i + 1:02d}" for i in range(len(names))]
    if names != expect:
        raise HistoryError(f"{path.name}: columns {names} do not form "
                           f"a contiguous {prefix!r} sequence")
    return np.stack([cols[n] for n in names])


def load_historical(source, time: TimeGrid | None = None) -> HistoricalDataset:
    """Load day files from a directory (or an explicit list of paths)."""
    time = time or TimeGrid()
    if isinstance(source, (str, Path)):
        files = sorted(Path(source).glob("day*_*.csv"))
    else:
        files = sorted(Path(p) for p in source)
    if not files:
        raise HistoryError("no day files found")

    days: dict[int, dict[str, Path]] = {}
    for f in files:
        stem = f.stem
        try:
            day_part, group = stem.split("_", 1)
            day = int(day_part.removeprefix("day"))
        except ValueError:
            raise HistoryError(f"{f.name}: expected dayNN_<group>.csv") from None
        if group not in GROUPS:
            raise HistoryError(f"{f.name}: unknown series group {group!r}")
        days.setdefault(day, {})[group] = f

    day_ids = sorted(days)
    for d in day_ids:
        missing = [g for g in GROUPS if g not in days[d]]
        if missing:
            raise HistoryError(f"day {d}: missing series group file(s) {missing}")

    T = time.slots_per_day
    da_buy, da_sell, rt = [], [], []
    solar, outdoor, irr = [], [], []
    base, heat, budget, loss, avail = [], [], [], [], []
    for d in day_ids:
        p = days[d]["prices"]
        cols = _read_csv(p, T)
        da_buy.append(_pick(cols, "da_buy_price", p))
        da_sell.append(_pick(cols, "da_sell_price", p))
        rt.append(_pick(cols, "rt_price", p))

        p = days[d]["weather"]
        cols = _read_csv(p, T)
        outdoor.append(_pick(cols, "outdoor_temp", p))
        irr.append(_pick(cols, "irradiance", p))
        solar.append(_numbered(cols, "solar_", p))

        p = days[d]["demand"]
        cols = _read_csv(p, T)
        base.append(_pick(cols, "base_load", p))
        heat.append(_pick(cols, "heat_load", p))
        budget.append(_numbered(cols, "ewh_budget_", p))
        loss.append(_numbered(cols, "ewh_heat_loss_", p))

        p = days[d]["availability"]
        cols = _read_csv(p, T)
        a = _numbered(cols, "pev_", p)
        bad = (a != 0.0) & (a != 1.0)
        if bad.any():
            k, t = np.argwhere(bad)[0]
            raise HistoryError(
                f"{p.name}: non-binary indicator {a[k, t]!r} "
                f"for pev_{k + 1:02d} at slot {t}")
        avail.append(a.astype(np.int8))

    def stack(parts):
        arr = np.stack(parts)
        if arr.ndim == 3 and arr.shape[-1] != T:
            raise HistoryError("inconsistent slot counts across days")
        return arr

    ds = HistoricalDataset(
        time=time,
        da_buy=stack(da_buy), da_sell=stack(da_sell), rt_price=stack(rt),
        solar=stack(solar), outdoor_temp=stack(outdoor), irradiance=stack(irr),
        base_load=stack(base), heat_load=stack(heat),
        ewh_budget=stack(budget), ewh_heat_loss=stack(loss),
        availability=stack(avail),
    )
    for name in ("da_buy", "da_sell", "rt_price"):
        if (getattr(ds, name) < 0).any():
            raise HistoryError(f"{name}: negative price in input data")
    return ds


# ---------------------------------------------------------------------------
# synthetic generator

def _bell(hours: np.ndarray, center: float, width: float) -> np.ndarray:
    return np.exp(-0.5 * ((hours - center) / width) ** 2)


def _daylight(hours: np.ndarray, rise=6.0, set_=18.0) -> np.ndarray:
    # raised half-sine between sunrise and sunset
    x = (hours - rise) / (set_ - rise)
    out = np.sin(np.pi * np.clip(x, 0.0, 1.0))
    out[(x <= 0) | (x >= 1)] = 0.0
    return out


def synthetic_history(model: CampusModel, days: int, seed: int) -> HistoricalDataset:
    """Deterministic stand-in for metered history, sized to the given campus."""
    if days < 1:
        raise ValueError("days must be >= 1")
    rng = np.random.default_rng(seed)
    time = model.time
    T = time.slots_per_day
    hours = (np.arange(T) + 0.5) * time.slot_hours
    M = model.n_solar_units
    J = model.n_ewhs
    K = len(model.pevs)
    cap_unit = model.solar_capacity / max(M, 1)

    da_buy = np.empty((days, T))
    da_sell = np.empty((days, T))
    rt = np.empty((days, T))
    solar = np.empty((days, M, T))
    outdoor = np.empty((days, T))
    irr = np.empty((days, T))
    base = np.empty((days, T))
    heat = np.empty((days, T))
    budget = np.zeros((days, J, T))
    loss = np.empty((days, J, T))
    avail = np.zeros((days, K, T), dtype=np.int8)

    price_shape = 0.06 + 0.07 * _bell(hours, 9.0, 2.5) + 0.09 * _bell(hours, 18.0, 2.0)
    load_shape = 0.16 + 0.16 * _bell(hours, 13.0, 4.0)
    heat_shape = 0.05 + 0.13 * _bell(hours, 12.0, 5.0)

    ewhs = [w for b in model.buildings for w in b.ewhs]

    for d in range(days):
        # prices: day-ahead and real-time move together around a common level
        level = rng.uniform(0.85, 1.25)
        wiggle = 1.0 + 0.05 * rng.standard_normal(T)
        da_buy[d] = np.maximum(price_shape * level * wiggle, 0.01)
        da_sell[d] = model.grid.da_sell_ratio * da_buy[d]
        rt[d] = np.maximum(da_buy[d] * (1.0 + 0.12 * rng.standard_normal(T)), 0.005)

        # weather: hotter days carry clearer skies (and thus more solar)
        day_heat = rng.uniform(0.0, 1.0)
        night = 19.0 + 3.0 * day_heat
        amp = 5.0 + 2.0 * day_heat
        outdoor[d] = night + amp * _bell(hours, 15.0, 4.5) \
            + 0.3 * rng.standard_normal(T)
        clearness = min(0.45 + 0.55 * day_heat + rng.uniform(-0.05, 0.05), 1.0)
        irr[d] = np.maximum(0.95 * clearness * _daylight(hours)
                            * (1.0 + 0.04 * rng.standard_normal(T)), 0.0)
        for m in range(M):
            solar[d, m] = np.clip(
                cap_unit * (irr[d] / 0.95) * (1.0 + 0.03 * rng.standard_normal(T)),
                0.0, cap_unit)

        # demand: electric base load and campus heat draw
        base[d] = model.p_base * load_shape * rng.uniform(0.92, 1.08) \
            * (1.0 + 0.03 * rng.standard_normal(T))
        base[d] = np.clip(base[d], 0.05 * model.p_base, 0.42 * model.p_base)
        heat[d] = np.maximum(
            model.h_base * 0.001
            + model.h_base * heat_shape * rng.uniform(0.85, 1.15)
            * (1.0 + 0.05 * rng.standard_normal(T)),
            0.0)

        # tank draw follows the campus heat demand plus a small standing loss;
        # the electric entitlement covers ~45% of the daily draw
        for j, w in enumerate(ewhs):
            share = heat[d] / max(J, 1)
            loss[d, j] = np.maximum(
                share * rng.uniform(1.0, 1.1) + 0.3 + 0.05 * rng.standard_normal(T),
                0.0)
            daily_kj = 0.45 * loss[d, j].sum() * units.KJ_PER_KBTU / w.zeta
            a, b = w.window
            budget[d, j, a:b] = daily_kj / (b - a)

        # parking: arrive around start of business, leave late afternoon
        arr_c = time.business_start_slot
        per_hour = 1.0 / time.slot_hours
        for k in range(K):
            arrive = int(np.clip(round(rng.normal(arr_c, 1.2 * per_hour)),
                                 arr_c - 2 * per_hour, arr_c + 3 * per_hour))
            depart = int(np.clip(round(rng.normal(arr_c + 10.5 * per_hour,
                                                  1.5 * per_hour)),
                                 arrive + 2 * per_hour, T - 1))
            avail[d, k, arrive:depart] = 1

    return HistoricalDataset(
        time=time, da_buy=da_buy, da_sell=da_sell, rt_price=rt, solar=solar,
        outdoor_temp=outdoor, irradiance=irr, base_load=base, heat_load=heat,
        ewh_budget=budget, ewh_heat_loss=loss, availability=avail,
    )
