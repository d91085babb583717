"""Campus configuration: defaults, JSON document loader, and serializer.

The document format is a JSON object with sections ``time``, ``bases``,
``grid``, ``pevs``, ``buildings`` and (optionally) ``history``. Any omitted
field falls back to the default parameterization shipped here: six buildings
with HVAC caps 0.10..0.35 of base power, a 50-vehicle fleet (70% Model-S
class, 10% Model-X class, the rest Leaf class), one water heater, one gas
boiler and one battery per building, a 1867 kW interconnection and base
power, and a 1224 kBtu heat base.

The HVAC wall/air matrices default to a documented synthetic pair: ``beta``
is diagonally dominant with spectral radius exactly 0.95 and ``alpha`` is
scaled so that a full-power cooling step moves the indoor reading by about
-0.5 degC in one slot while the zero-power steady state tracks the outdoor
temperature. Real studies should override them with identified values.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .model import (
    Building,
    BoilerParams,
    CampusModel,
    ComfortBand,
    EsParams,
    EwhParams,
    GridMarketParams,
    HvacParams,
    PevParams,
    TimeGrid,
    validate,
)


class ConfigError(ValueError):
    """Raised for schema violations and invariant violations while loading."""


# ---------------------------------------------------------------------------
# default parameterization

HVAC_BAND = ComfortBand(desired=24.0, delta=2.0, epsilon=0.5)
EWH_BAND = ComfortBand(desired=40.0, delta=10.0, epsilon=0.0)
EWH_TEMP_INIT = 30.0

PEV_DESIRED_FRACTION = 0.80
PEV_BASE_FRACTION = 0.10
PEV_INIT_FRACTION = 0.10

# per class: (e_min kWh, e_max kWh, p_charge_max kW)
PEV_CLASSES: dict[str, tuple[float, float, float]] = {
    "model_s": (3.8, 75.0, 11.5),
    "model_x": (5.0, 100.0, 17.2),
    "leaf": (1.5, 30.0, 3.6),
}
PEV_CLASS_SHARES = {"model_s": 0.70, "model_x": 0.10, "leaf": 0.02}

HVAC_P_MAX_DEFAULTS = (0.10, 0.15, 0.20, 0.25, 0.30, 0.35)  # fraction of p_base
HVAC_COP_DEFAULT = 2.5

P_BASE_DEFAULT = 1867.0
H_BASE_DEFAULT = 1224.0
SOLAR_CAPACITY_DEFAULT = 1500.0
G_MAX_DEFAULT = 1867.0
PENALTY_COST_DEFAULT = 0.02      # $/kW of day-ahead vs real-time mismatch
GAS_PRICE_DEFAULT = 0.010        # $/kBtu, flat long-term contract
DA_SELL_RATIO_DEFAULT = 0.8
BOILER_H_MAX_DEFAULT = 206.0     # kBtu per slot
POPULATION_DEFAULT = 100

EWH_L_MAX_DEFAULT = 25.0         # kW
EWH_MASS_DEFAULT = 500.0         # kg

_BETA_SEED = (
    (0.88, 0.06, 0.015),
    (0.05, 0.88, 0.05),
    (0.015, 0.05, 0.86),
)
_COOLING_COUPLING = (1.0, 0.9, 0.7)   # share of thermal power hitting air/walls
_FIRST_SLOT_STEP = 0.5                # degC moved by one full-power slot
_SUN_GAIN = 2.0                       # steady degC added by 1 kW/m^2


def default_hvac_dynamics(p_max_kw: float, cop: float) -> tuple[tuple, tuple]:
    """Synthesize the default (beta, alpha) pair for a building of given size.

    beta: the seed matrix rescaled to spectral radius 0.95 exactly.
    alpha columns: outdoor coupling chosen so the unforced steady state equals
    the outdoor temperature, irradiance coupling worth +2 degC steady per
    kW/m^2, and thermal-power coupling sized for a -0.5 degC first-slot step
    at full cooling power.
    """
    seed = np.asarray(_BETA_SEED, dtype=float)
    rho = np.abs(np.linalg.eigvals(seed)).max()
    beta = seed * (0.95 / rho)
    track = (np.eye(3) - beta) @ np.ones(3)
    power_col = np.asarray(_COOLING_COUPLING) * (_FIRST_SLOT_STEP / (cop * p_max_kw))
    alpha = np.column_stack([track, _SUN_GAIN * track, power_col])
    to_t = lambda m: tuple(tuple(float(x) for x in row) for row in m)
    return to_t(beta), to_t(alpha)


def default_pev(kind: str, label: str = "") -> PevParams:
    e_min, e_max, p_max = PEV_CLASSES[kind]
    return PevParams(
        e_min=e_min,
        e_max=e_max,
        p_charge_max=p_max,
        e_desired=PEV_DESIRED_FRACTION * e_max,
        e_base=PEV_BASE_FRACTION * e_max,
        e_init=PEV_INIT_FRACTION * e_max,
        label=label or kind,
    )


def default_fleet(n: int) -> tuple[PevParams, ...]:
    """Fleet composition by market share; the unallocated remainder is Leaf class."""
    counts = {k: int(n * s) for k, s in PEV_CLASS_SHARES.items()}
    counts["leaf"] += n - sum(counts.values())
    fleet = []
    for kind in ("model_s", "model_x", "leaf"):
        for _ in range(counts[kind]):
            fleet.append(default_pev(kind, label=f"{kind}_{len(fleet)}"))
    return tuple(fleet)


def default_ewh(time: TimeGrid) -> EwhParams:
    # window 06:00 .. 22:00 expressed on the configured grid
    per_hour = 1.0 / time.slot_hours
    return EwhParams(
        l_max=EWH_L_MAX_DEFAULT,
        mass=EWH_MASS_DEFAULT,
        band=EWH_BAND,
        window=(int(6 * per_hour), int(22 * per_hour)),
        temp_init=EWH_TEMP_INIT,
    )


def default_campus() -> CampusModel:
    time = TimeGrid()
    buildings = []
    n_b = len(HVAC_P_MAX_DEFAULTS)
    fleet = default_fleet(50)
    for bi, p_max in enumerate(HVAC_P_MAX_DEFAULTS):
        beta, alpha = default_hvac_dynamics(p_max * P_BASE_DEFAULT, HVAC_COP_DEFAULT)
        buildings.append(
            Building(
                hvac=HvacParams(beta=beta, alpha=alpha, cop=HVAC_COP_DEFAULT,
                                p_max=p_max, band=HVAC_BAND),
                ewhs=(default_ewh(time),),
                boilers=(BoilerParams(h_max=BOILER_H_MAX_DEFAULT),),
                storages=(EsParams(),),
                pev_ids=tuple(k for k in range(len(fleet)) if k % n_b == bi),
                population=POPULATION_DEFAULT,
            )
        )
    grid = GridMarketParams(
        g_max=G_MAX_DEFAULT,
        penalty_cost=PENALTY_COST_DEFAULT,
        gas_price=(GAS_PRICE_DEFAULT,) * time.slots_per_day,
        da_sell_ratio=DA_SELL_RATIO_DEFAULT,
    )
    return CampusModel(
        time=time,
        buildings=tuple(buildings),
        pevs=fleet,
        grid=grid,
        p_base=P_BASE_DEFAULT,
        h_base=H_BASE_DEFAULT,
        solar_capacity=SOLAR_CAPACITY_DEFAULT,
    )


# ---------------------------------------------------------------------------
# document -> model

def _expect_mapping(obj, path):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object, got {type(obj).__name__}")
    return obj


def _known_keys(obj: dict, path: str, allowed: set[str]):
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown field(s) {sorted(unknown)}")


def _number(obj: dict, key: str, path: str, default=None):
    if key not in obj:
        if default is None:
            raise ConfigError(f"{path}.{key}: required field missing")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {type(v).__name__}")
    return float(v)


def _integer(obj: dict, key: str, path: str, default=None):
    v = _number(obj, key, path, default)
    if v != int(v):
        raise ConfigError(f"{path}.{key}: expected an integer, got {v}")
    return int(v)


def _band(obj, path, default: ComfortBand) -> ComfortBand:
    if obj is None:
        return default
    _expect_mapping(obj, path)
    _known_keys(obj, path, {"desired", "delta", "epsilon"})
    return ComfortBand(
        desired=_number(obj, "desired", path, default.desired),
        delta=_number(obj, "delta", path, default.delta),
        epsilon=_number(obj, "epsilon", path, default.epsilon),
    )


def _matrix3(obj, path) -> tuple:
    try:
        rows = tuple(tuple(float(x) for x in row) for row in obj)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a 3x3 numeric matrix") from None
    if len(rows) != 3 or any(len(r) != 3 for r in rows):
        raise ConfigError(f"{path}: expected a 3x3 numeric matrix")
    return rows


def _load_time(doc) -> TimeGrid:
    obj = doc.get("time")
    if obj is None:
        return TimeGrid()
    _expect_mapping(obj, "time")
    _known_keys(obj, "time", {"slots_per_day", "slot_hours",
                              "business_start_slot", "business_end_slot"})
    return TimeGrid(
        slots_per_day=_integer(obj, "slots_per_day", "time", 96),
        slot_hours=_number(obj, "slot_hours", "time", 0.25),
        business_start_slot=_integer(obj, "business_start_slot", "time", 32),
        business_end_slot=_integer(obj, "business_end_slot", "time", 80),
    )


def _load_pevs(doc) -> tuple[PevParams, ...]:
    obj = doc.get("pevs")
    if obj is None:
        return default_fleet(50)
    if isinstance(obj, dict):
        _known_keys(obj, "pevs", {"fleet_size", "class_shares"})
        n = _integer(obj, "fleet_size", "pevs")
        shares = obj.get("class_shares", PEV_CLASS_SHARES)
        _expect_mapping(shares, "pevs.class_shares")
        for k in shares:
            if k not in PEV_CLASSES:
                raise ConfigError(
                    f"pevs.class_shares.{k}: unknown class "
                    f"(choose from {sorted(PEV_CLASSES)})")
        counts = {k: int(n * float(shares.get(k, 0.0))) for k in PEV_CLASSES}
        counts["leaf"] += n - sum(counts.values())
        fleet = []
        for kind in ("model_s", "model_x", "leaf"):
            for _ in range(counts[kind]):
                fleet.append(default_pev(kind, label=f"{kind}_{len(fleet)}"))
        return tuple(fleet)
    if not isinstance(obj, list):
        raise ConfigError("pevs: expected an object or a list")
    fleet = []
    for ki, entry in enumerate(obj):
        path = f"pevs[{ki}]"
        _expect_mapping(entry, path)
        allowed = {"class", "e_min", "e_max", "p_charge_max", "e_desired",
                   "e_base", "e_init", "eta_charge", "degradation_cost", "label"}
        _known_keys(entry, path, allowed)
        kind = entry.get("class", "model_s")
        if kind not in PEV_CLASSES:
            raise ConfigError(f"{path}.class: unknown class {kind!r}")
        base = default_pev(kind, label=entry.get("label", f"{kind}_{ki}"))
        e_max = _number(entry, "e_max", path, base.e_max)
        fleet.append(PevParams(
            e_min=_number(entry, "e_min", path, base.e_min),
            e_max=e_max,
            p_charge_max=_number(entry, "p_charge_max", path, base.p_charge_max),
            e_desired=_number(entry, "e_desired", path, PEV_DESIRED_FRACTION * e_max),
            e_base=_number(entry, "e_base", path, PEV_BASE_FRACTION * e_max),
            e_init=_number(entry, "e_init", path, PEV_INIT_FRACTION * e_max),
            eta_charge=_number(entry, "eta_charge", path, base.eta_charge),
            degradation_cost=_number(entry, "degradation_cost", path,
                                     base.degradation_cost),
            label=str(entry.get("label", f"{kind}_{ki}")),
        ))
    return tuple(fleet)


def _load_building(entry, bi, time, p_base, n_buildings) -> Building:
    path = f"buildings[{bi}]"
    _expect_mapping(entry, path)
    _known_keys(entry, path, {"population", "hvac", "ewhs", "boilers",
                              "storages", "pev_ids"})

    hv = entry.get("hvac", {})
    _expect_mapping(hv, path + ".hvac")
    _known_keys(hv, path + ".hvac", {"p_max", "cop", "mode", "band", "beta",
                                     "alpha", "gamma", "initial_state"})
    default_pmax = HVAC_P_MAX_DEFAULTS[bi % len(HVAC_P_MAX_DEFAULTS)]
    p_max = _number(hv, "p_max", path + ".hvac", default_pmax)
    cop = _number(hv, "cop", path + ".hvac", HVAC_COP_DEFAULT)
    if "beta" in hv or "alpha" in hv:
        if not ("beta" in hv and "alpha" in hv):
            raise ConfigError(f"{path}.hvac: beta and alpha must be given together")
        beta = _matrix3(hv["beta"], path + ".hvac.beta")
        alpha = _matrix3(hv["alpha"], path + ".hvac.alpha")
    else:
        beta, alpha = default_hvac_dynamics(p_max * p_base, cop)
    init = hv.get("initial_state", (24.0, 24.0, 26.0))
    try:
        init = tuple(float(x) for x in init)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.hvac.initial_state: expected 3 numbers") from None
    if len(init) != 3:
        raise ConfigError(f"{path}.hvac.initial_state: expected 3 numbers")
    gamma = tuple(float(x) for x in hv.get("gamma", (1.0, 0.0, 0.0)))
    hvac = HvacParams(
        beta=beta, alpha=alpha, cop=cop, p_max=p_max,
        band=_band(hv.get("band"), path + ".hvac.band", HVAC_BAND),
        mode=_integer(hv, "mode", path + ".hvac", -1),
        gamma=gamma, initial_state=init,
    )

    ewhs = []
    for ji, w in enumerate(entry.get("ewhs", [{}])):
        wpath = f"{path}.ewhs[{ji}]"
        _expect_mapping(w, wpath)
        _known_keys(w, wpath, {"l_min", "l_max", "zeta", "mass", "c_water",
                               "band", "window", "temp_init"})
        base = default_ewh(time)
        window = w.get("window", base.window)
        try:
            window = (int(window[0]), int(window[1]))
        except (TypeError, ValueError, IndexError):
            raise ConfigError(f"{wpath}.window: expected [start, end] slots") from None
        ewhs.append(EwhParams(
            l_max=_number(w, "l_max", wpath, base.l_max),
            l_min=_number(w, "l_min", wpath, base.l_min),
            zeta=_number(w, "zeta", wpath, base.zeta),
            mass=_number(w, "mass", wpath, base.mass),
            c_water=_number(w, "c_water", wpath, base.c_water),
            band=_band(w.get("band"), wpath + ".band", base.band),
            window=window,
            temp_init=_number(w, "temp_init", wpath, base.temp_init),
        ))

    boilers = []
    for hi, hb in enumerate(entry.get("boilers", [{}])):
        hpath = f"{path}.boilers[{hi}]"
        _expect_mapping(hb, hpath)
        _known_keys(hb, hpath, {"h_max_kbtu"})
        boilers.append(BoilerParams(h_max=_number(hb, "h_max_kbtu", hpath,
                                                  BOILER_H_MAX_DEFAULT)))

    storages = []
    for ni, es in enumerate(entry.get("storages", [{}])):
        epath = f"{path}.storages[{ni}]"
        _expect_mapping(es, epath)
        _known_keys(es, epath, {"e_min", "e_max", "p_charge_max", "p_discharge_max",
                                "eta_charge", "eta_discharge", "e_init",
                                "degradation_cost"})
        d = EsParams()
        storages.append(EsParams(
            e_min=_number(es, "e_min", epath, d.e_min),
            e_max=_number(es, "e_max", epath, d.e_max),
            p_charge_max=_number(es, "p_charge_max", epath, d.p_charge_max),
            p_discharge_max=_number(es, "p_discharge_max", epath, d.p_discharge_max),
            eta_charge=_number(es, "eta_charge", epath, d.eta_charge),
            eta_discharge=_number(es, "eta_discharge", epath, d.eta_discharge),
            e_init=_number(es, "e_init", epath, d.e_init),
            degradation_cost=_number(es, "degradation_cost", epath, d.degradation_cost),
        ))

    pev_ids = entry.get("pev_ids")
    return Building(
        hvac=hvac,
        ewhs=tuple(ewhs),
        boilers=tuple(boilers),
        storages=tuple(storages),
        pev_ids=tuple(int(k) for k in pev_ids) if pev_ids is not None else (),
        population=_integer(entry, "population", path, POPULATION_DEFAULT),
    )


def load_campus_config(document) -> CampusModel:
    """Build a validated model from a JSON document, dict, text, or file path.

    Missing fields are filled from the default campus; any schema or
    invariant violation raises :class:`ConfigError` naming the field.
    """
    if isinstance(document, Path):
        document = document.read_text()
    elif isinstance(document, str) and "\n" not in document and document.endswith(".json"):
        document = Path(document).read_text()
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise ConfigError(f"document is not valid JSON: {e}") from None
    doc = _expect_mapping(document, "document")
    _known_keys(doc, "document", {"time", "bases", "grid", "pevs",
                                  "buildings", "history"})

    time = _load_time(doc)

    bases = doc.get("bases", {})
    _expect_mapping(bases, "bases")
    _known_keys(bases, "bases", {"p_base_kw", "h_base_kbtu", "solar_capacity_kw"})
    p_base = _number(bases, "p_base_kw", "bases", P_BASE_DEFAULT)
    h_base = _number(bases, "h_base_kbtu", "bases", H_BASE_DEFAULT)
    solar = _number(bases, "solar_capacity_kw", "bases", SOLAR_CAPACITY_DEFAULT)

    gobj = doc.get("grid", {})
    _expect_mapping(gobj, "grid")
    _known_keys(gobj, "grid", {"g_max_kw", "penalty_cost_per_kw", "da_sell_ratio",
                               "gas_price_per_kbtu"})
    gas = gobj.get("gas_price_per_kbtu", GAS_PRICE_DEFAULT)
    if isinstance(gas, (int, float)) and not isinstance(gas, bool):
        gas_series = (float(gas),) * time.slots_per_day
    elif isinstance(gas, list):
        gas_series = tuple(float(x) for x in gas)
        if len(gas_series) != time.slots_per_day:
            raise ConfigError(
                f"grid.gas_price_per_kbtu: {len(gas_series)} entries for "
                f"{time.slots_per_day} slots")
    else:
        raise ConfigError("grid.gas_price_per_kbtu: expected a number or list")
    grid = GridMarketParams(
        g_max=_number(gobj, "g_max_kw", "grid", G_MAX_DEFAULT),
        penalty_cost=_number(gobj, "penalty_cost_per_kw", "grid", PENALTY_COST_DEFAULT),
        gas_price=gas_series,
        da_sell_ratio=_number(gobj, "da_sell_ratio", "grid", DA_SELL_RATIO_DEFAULT),
    )

    pevs = _load_pevs(doc)

    bentries = doc.get("buildings")
    if bentries is None:
        bentries = [{} for _ in range(len(HVAC_P_MAX_DEFAULTS))]
    if not isinstance(bentries, list) or not bentries:
        raise ConfigError("buildings: expected a non-empty list")
    buildings = [
        _load_building(e, bi, time, p_base, len(bentries))
        for bi, e in enumerate(bentries)
    ]

    # pevs without an explicit home go round-robin across buildings
    if all(not b.pev_ids for b in buildings):
        n_b = len(buildings)
        assignment = [tuple(k for k in range(len(pevs)) if k % n_b == bi)
                      for bi in range(n_b)]
        buildings = [
            Building(hvac=b.hvac, ewhs=b.ewhs, boilers=b.boilers,
                     storages=b.storages, pev_ids=assignment[bi],
                     population=b.population)
            for bi, b in enumerate(buildings)
        ]

    model = CampusModel(
        time=time, buildings=tuple(buildings), pevs=pevs, grid=grid,
        p_base=p_base, h_base=h_base, solar_capacity=solar,
    )
    report = validate(model)
    if not report.ok:
        lines = "; ".join(
            f"{v.path}: {v.invariant} required ({v.message})" for v in report.violations
        )
        raise ConfigError(f"invariant violation: {lines}")
    return model


# ---------------------------------------------------------------------------
# model -> document

def serialize_campus(model: CampusModel, history: dict | None = None) -> dict:
    """Emit a document that loads back into a structurally equal model."""
    doc: dict[str, Any] = {
        "time": {
            "slots_per_day": model.time.slots_per_day,
            "slot_hours": model.time.slot_hours,
            "business_start_slot": model.time.business_start_slot,
            "business_end_slot": model.time.business_end_slot,
        },
        "bases": {
            "p_base_kw": model.p_base,
            "h_base_kbtu": model.h_base,
            "solar_capacity_kw": model.solar_capacity,
        },
        "grid": {
            "g_max_kw": model.grid.g_max,
            "penalty_cost_per_kw": model.grid.penalty_cost,
            "da_sell_ratio": model.grid.da_sell_ratio,
            "gas_price_per_kbtu": list(model.grid.gas_price),
        },
        "pevs": [
            {
                "class": next((k for k, v in PEV_CLASSES.items()
                               if v == (p.e_min, p.e_max, p.p_charge_max)), "model_s"),
                "e_min": p.e_min, "e_max": p.e_max,
                "p_charge_max": p.p_charge_max,
                "e_desired": p.e_desired, "e_base": p.e_base, "e_init": p.e_init,
                "eta_charge": p.eta_charge,
                "degradation_cost": p.degradation_cost,
                "label": p.label,
            }
            for p in model.pevs
        ],
        "buildings": [
            {
                "population": b.population,
                "pev_ids": list(b.pev_ids),
                "hvac": {
                    "p_max": b.hvac.p_max,
                    "cop": b.hvac.cop,
                    "mode": b.hvac.mode,
                    "band": {"desired": b.hvac.band.desired,
                             "delta": b.hvac.band.delta,
                             "epsilon": b.hvac.band.epsilon},
                    "beta": [list(r) for r in b.hvac.beta],
                    "alpha": [list(r) for r in b.hvac.alpha],
                    "initial_state": list(b.hvac.initial_state),
                },
                "ewhs": [
                    {
                        "l_min": w.l_min, "l_max": w.l_max, "zeta": w.zeta,
                        "mass": w.mass, "c_water": w.c_water,
                        "band": {"desired": w.band.desired, "delta": w.band.delta,
                                 "epsilon": w.band.epsilon},
                        "window": list(w.window),
                        "temp_init": w.temp_init,
                    }
                    for w in b.ewhs
                ],
                "boilers": [{"h_max_kbtu": hb.h_max} for hb in b.boilers],
                "storages": [
                    {
                        "e_min": e.e_min, "e_max": e.e_max,
                        "p_charge_max": e.p_charge_max,
                        "p_discharge_max": e.p_discharge_max,
                        "eta_charge": e.eta_charge, "eta_discharge": e.eta_discharge,
                        "e_init": e.e_init, "degradation_cost": e.degradation_cost,
                    }
                    for e in b.storages
                ],
            }
            for b in model.buildings
        ],
    }
    if history is not None:
        doc["history"] = history
    return doc


def bundled_config(name: str) -> dict:
    """Return one of the shipped configs: ``default`` or ``desk``."""
    fname = {"default": "default_campus.json", "desk": "desk_campus.json"}.get(name)
    if fname is None:
        raise ConfigError(f"no bundled config named {name!r}")
    text = resources.files("campusdr").joinpath("data", fname).read_text()
    return json.loads(text)
