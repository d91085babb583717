"""Forward device dynamics and closed-form comfort functions.

These are the reference implementations the optimization encodings are
verified against: every function is a direct, slot-by-slot evaluation of the
underlying recursion or piecewise-linear curve, independent of any solver.

All functions are pure and operate on immutable inputs, so they can be
called from any number of threads (for example one scenario per worker).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import units
from .model import CampusModel, ComfortBand, EsParams, EwhParams, HvacParams, PevParams
from .schedule import Schedule

ABS_ZERO_C = -273.15


@dataclass(frozen=True)
class HvacState:
    """Indoor air and wall temperatures, degC."""

    indoor: float
    inner_wall: float
    outer_wall: float

    def as_array(self) -> np.ndarray:
        return np.array([self.indoor, self.inner_wall, self.outer_wall])


@dataclass(frozen=True)
class HvacInput:
    """Exogenous drivers plus the signed thermal power (mode * cop * electric kW)."""

    outdoor: float
    irradiance: float
    thermal_power: float

    def as_array(self) -> np.ndarray:
        return np.array([self.outdoor, self.irradiance, self.thermal_power])


def hvac_step(state: HvacState, inp: HvacInput, params: HvacParams) -> HvacState:
    """One slot of the wall/air state-space recursion: beta @ x + alpha @ u."""
    x = params.beta_matrix() @ state.as_array() + params.alpha_matrix() @ inp.as_array()
    return HvacState(float(x[0]), float(x[1]), float(x[2]))


def hvac_indoor(state: HvacState, params: HvacParams) -> float:
    """Indoor readout gamma @ x (gamma is the (1, 0, 0) selector)."""
    return float(np.dot(params.gamma, state.as_array()))


def hvac_comfort(indoor: float, band: ComfortBand) -> float:
    """Trapezoidal comfort: 1 inside desired +- epsilon, 0 beyond desired +- delta.

    The ramps have slope 1/(delta - epsilon) on both sides.
    """
    if indoor >= band.upper or indoor <= band.lower:
        return 0.0
    ramp = band.delta - band.epsilon
    if indoor >= band.desired + band.epsilon:
        return (band.upper - indoor) / ramp
    if indoor <= band.desired - band.epsilon:
        return (indoor - band.lower) / ramp
    return 1.0


def pev_step(e: float, p_charge: float, params: PevParams, dt: float) -> float:
    """Charge-only energy update over one slot of dt hours."""
    if p_charge < -1e-12 or p_charge > params.p_charge_max + 1e-9:
        raise ValueError(
            f"charge power {p_charge} kW outside [0, {params.p_charge_max}]")
    return e + p_charge * params.eta_charge * dt


def pev_comfort(e: float, params: PevParams) -> float:
    """0 at the commute reserve, 1 at the desired level, linear in between."""
    if e >= params.e_desired:
        return 1.0
    if e <= params.e_base:
        return 0.0
    return (e - params.e_base) / (params.e_desired - params.e_base)


def ewh_increment_c(l_kw: float, h_kbtu: float, loss_kbtu: float,
                    params: EwhParams, dt_hours: float) -> float:
    """Temperature change from one slot: electric + boiler heat minus draw.

    The numerator is converted to Joules (kWh -> kJ x3600, kBtu -> kJ
    x1055.06) and divided by the tank's heat capacity mass * c_water.
    """
    joules = (params.zeta * l_kw * dt_hours * units.KJ_PER_KWH
              + (h_kbtu - loss_kbtu) * units.KJ_PER_KBTU) * 1e3
    return joules / (params.mass * params.c_water)


def ewh_temperature(power_series: Sequence[float], boiler_series: Sequence[float],
                    heat_loss_series: Sequence[float], params: EwhParams,
                    upto: int, dt_hours: float) -> float:
    """Tank temperature after the first ``upto`` slots have been applied."""
    if min(len(power_series), len(boiler_series), len(heat_loss_series)) < upto:
        raise ValueError(f"series shorter than upto={upto}")
    c = params.temp_init
    for t in range(upto):
        c += ewh_increment_c(power_series[t], boiler_series[t],
                             heat_loss_series[t], params, dt_hours)
        if c < ABS_ZERO_C:
            raise ValueError(
                f"tank temperature {c:.1f} degC below absolute zero at slot {t}; "
                "heat-loss data inconsistent with heating series")
    return c


def ewh_comfort(temp: float, params: EwhParams) -> float:
    """0 at the tolerance floor, 1 at or above the desired water temperature."""
    band = params.band
    if temp >= band.desired:
        return 1.0
    if temp <= band.lower:
        return 0.0
    return (temp - band.lower) / (band.desired - band.lower)


def es_step(e: float, p_charge: float, p_discharge: float,
            params: EsParams, dt: float) -> float:
    """Energy update with one-way efficiencies; charging and discharging exclude."""
    if p_charge > 1e-9 and p_discharge > 1e-9:
        raise ValueError(
            f"simultaneous charge ({p_charge} kW) and discharge ({p_discharge} kW)")
    if not (0 <= p_charge <= params.p_charge_max + 1e-9):
        raise ValueError(f"charge power {p_charge} outside [0, {params.p_charge_max}]")
    if not (0 <= p_discharge <= params.p_discharge_max + 1e-9):
        raise ValueError(
            f"discharge power {p_discharge} outside [0, {params.p_discharge_max}]")
    return (e + p_charge * params.eta_charge * dt
            - p_discharge * dt / params.eta_discharge)


# ---------------------------------------------------------------------------
# whole-schedule simulation

@dataclass(frozen=True)
class ConstraintViolation:
    slot: int
    device: str
    kind: str
    amount: float

    def __str__(self) -> str:
        return f"slot {self.slot}: {self.device}: {self.kind} by {self.amount:.3g}"


@dataclass(eq=False)
class Trajectory:
    """Re-simulated device states, comfort values, and balance residuals."""

    hvac_state: np.ndarray      # (B, 3, T)
    hvac_power: np.ndarray      # (B, T)
    hvac_comfort: np.ndarray    # (B, T)
    pev_energy: np.ndarray      # (K, T)
    pev_power: np.ndarray       # (K, T)
    pev_comfort: np.ndarray     # (K, T)
    ewh_temp: np.ndarray        # (J, T)
    ewh_power: np.ndarray       # (J, T)
    ewh_comfort: np.ndarray     # (J, T)
    boiler_heat: np.ndarray     # (Jb, T)
    es_energy: np.ndarray       # (N, T)
    power_residual: np.ndarray  # (T,) kW, balance LHS - RHS
    heat_slack: np.ndarray      # (T,) kBtu, supply - demand
    violations: tuple[ConstraintViolation, ...]

    @property
    def n_slots(self) -> int:
        return self.power_residual.shape[0]

    def write_csv(self, path):
        """One row per slot; one column per device series."""
        import csv

        cols: list[tuple[str, np.ndarray]] = []
        for bi in range(self.hvac_state.shape[0]):
            cols.append((f"hvac_{bi}_indoor", self.hvac_state[bi, 0]))
            cols.append((f"hvac_{bi}_power", self.hvac_power[bi]))
            cols.append((f"hvac_{bi}_comfort", self.hvac_comfort[bi]))
        for k in range(self.pev_energy.shape[0]):
            cols.append((f"pev_{k}_energy", self.pev_energy[k]))
            cols.append((f"pev_{k}_comfort", self.pev_comfort[k]))
        for j in range(self.ewh_temp.shape[0]):
            cols.append((f"ewh_{j}_temp", self.ewh_temp[j]))
            cols.append((f"ewh_{j}_power", self.ewh_power[j]))
            cols.append((f"ewh_{j}_comfort", self.ewh_comfort[j]))
        for j in range(self.boiler_heat.shape[0]):
            cols.append((f"boiler_{j}_heat", self.boiler_heat[j]))
        for n in range(self.es_energy.shape[0]):
            cols.append((f"es_{n}_energy", self.es_energy[n]))
        cols.append(("power_residual", self.power_residual))
        cols.append(("heat_slack", self.heat_slack))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["slot"] + [c[0] for c in cols])
            for t in range(self.n_slots):
                w.writerow([t] + [repr(float(c[1][t])) for c in cols])


def simulate_schedule(model: CampusModel, schedule: Schedule, scenario) -> Trajectory:
    """Re-run all device dynamics for one scenario of a schedule.

    States are recomputed from the dispatched powers (not copied from the
    solver), so agreement between the returned trajectory and the solver's
    own state variables is evidence that the algebraic encoding is right.
    Flags every constraint violation with its slot and device.
    """
    time = model.time
    T = time.slots_per_day
    dt = time.slot_hours
    if scenario.n_slots != T:
        raise ValueError(f"scenario has {scenario.n_slots} slots, model {T}")
    if schedule.n_slots != T:
        raise ValueError(f"schedule has {schedule.n_slots} slots, model {T}")
    if scenario.index >= schedule.n_scenarios:
        raise ValueError(
            f"schedule covers {schedule.n_scenarios} scenarios, "
            f"scenario.index = {scenario.index}")
    dis = schedule.dispatches[scenario.index]

    B = len(model.buildings)
    K = len(model.pevs)
    J = model.n_ewhs
    Jb = model.n_boilers
    N = model.n_storages
    if dis.hvac_p.shape != (B, T) or dis.pev_p.shape != (K, T) \
            or dis.ewh_l.shape != (J, T) or dis.boiler_h.shape != (Jb, T) \
            or dis.es_charge.shape != (N, T):
        raise ValueError("dispatch arrays do not match the campus dimensions")

    bad: list[ConstraintViolation] = []
    tol = 1e-6

    def flag(cond_amounts, device, kind):
        for t, amount in cond_amounts:
            bad.append(ConstraintViolation(int(t), device, kind, float(amount)))

    # market positions against interconnection limits
    g = model.grid
    for name, series, cap in (
        ("gda_buy", schedule.gda_buy, np.full(T, g.g_max)),
        ("gda_sell", schedule.gda_sell, np.full(T, g.g_max)),
        ("grt_buy", dis.grt_buy, g.g_max * scenario.dr_signal),
        ("grt_sell", dis.grt_sell, g.g_max * scenario.dr_signal),
    ):
        over = np.nonzero(series > cap + tol)[0]
        flag(((t, series[t] - cap[t]) for t in over), "pcc", f"{name} above limit")
        under = np.nonzero(series < -tol)[0]
        flag(((t, series[t]) for t in under), "pcc", f"{name} negative")

    # HVAC: replay the state recursion
    hvac_state = np.empty((B, 3, T))
    hvac_cmf = np.zeros((B, T))
    for bi, b in enumerate(model.buildings):
        hv = b.hvac
        p_cap = hv.p_max_kw(model.p_base)
        over = np.nonzero(dis.hvac_p[bi] > p_cap + tol)[0]
        flag(((t, dis.hvac_p[bi, t] - p_cap) for t in over),
             f"hvac[{bi}]", "power above cap")
        state = HvacState(*hv.initial_state)
        for t in range(T):
            inp = HvacInput(
                outdoor=float(scenario.outdoor_temp[t]),
                irradiance=float(scenario.irradiance[t]),
                thermal_power=hv.mode * hv.cop * float(dis.hvac_p[bi, t]),
            )
            state = hvac_step(state, inp, hv)
            hvac_state[bi, :, t] = state.as_array()
            hvac_cmf[bi, t] = hvac_comfort(hvac_indoor(state, hv), hv.band)
            if time.is_business(t):
                ind = hvac_indoor(state, hv)
                if ind > hv.band.upper + tol:
                    bad.append(ConstraintViolation(
                        t, f"hvac[{bi}]", "indoor above band", ind - hv.band.upper))
                elif ind < hv.band.lower - tol:
                    bad.append(ConstraintViolation(
                        t, f"hvac[{bi}]", "indoor below band", hv.band.lower - ind))

    # PEVs: charge-only accumulation, frozen while away
    pev_e = np.empty((K, T))
    pev_cmf = np.empty((K, T))
    for k, p in enumerate(model.pevs):
        cap = p.p_charge_max * scenario.availability[k].astype(float)
        over = np.nonzero(dis.pev_p[k] > cap + tol)[0]
        flag(((t, dis.pev_p[k, t] - cap[t]) for t in over),
             f"pev[{k}]", "charge above cap or while away")
        e = p.e_init
        for t in range(T):
            e = e + dis.pev_p[k, t] * p.eta_charge * dt
            pev_e[k, t] = e
            pev_cmf[k, t] = pev_comfort(e, p)
            if e > p.e_max + tol:
                bad.append(ConstraintViolation(t, f"pev[{k}]", "energy above cap",
                                               e - p.e_max))
            if e < p.e_min - tol:
                bad.append(ConstraintViolation(t, f"pev[{k}]", "energy below floor",
                                               p.e_min - e))

    # EWH tanks and their paired boilers
    ewhs = [(bi, w) for bi, b in enumerate(model.buildings) for w in b.ewhs]
    boilers = [(bi, hb) for bi, b in enumerate(model.buildings) for hb in b.boilers]
    ewh_c = np.empty((J, T))
    ewh_cmf = np.empty((J, T))
    for j, (bi, w) in enumerate(ewhs):
        l = dis.ewh_l[j]
        h = dis.boiler_h[j] if j < Jb else np.zeros(T)
        a, d_end = w.window
        outside = np.nonzero((np.abs(l) > tol)
                             & ~((np.arange(T) >= a) & (np.arange(T) < d_end)))[0]
        flag(((t, l[t]) for t in outside), f"ewh[{j}]", "draw outside window")
        inside = np.arange(a, d_end)
        over = inside[l[inside] > w.l_max + tol]
        flag(((t, l[t] - w.l_max) for t in over), f"ewh[{j}]", "draw above cap")
        under = inside[l[inside] < w.l_min - tol]
        flag(((t, w.l_min - l[t]) for t in under), f"ewh[{j}]", "draw below floor")

        budget_kwh = scenario.ewh_budget[j].sum() / units.KJ_PER_KWH
        served = l[inside].sum() * dt
        if abs(served - budget_kwh) > 1e-5 * max(1.0, budget_kwh):
            bad.append(ConstraintViolation(
                int(d_end - 1), f"ewh[{j}]", "daily energy budget missed",
                served - budget_kwh))

        c = w.temp_init
        for t in range(T):
            c += ewh_increment_c(l[t], h[t], float(scenario.ewh_heat_loss[j, t]),
                                 w, dt)
            ewh_c[j, t] = c
            ewh_cmf[j, t] = ewh_comfort(c, w)
            if time.is_business(t):
                if c > w.band.upper + tol:
                    bad.append(ConstraintViolation(
                        t, f"ewh[{j}]", "water above band", c - w.band.upper))
                elif c < w.band.lower - tol:
                    bad.append(ConstraintViolation(
                        t, f"ewh[{j}]", "water below band", w.band.lower - c))

    for j, (bi, hb) in enumerate(boilers):
        over = np.nonzero(dis.boiler_h[j] > hb.h_max + tol)[0]
        flag(((t, dis.boiler_h[j, t] - hb.h_max) for t in over),
             f"boiler[{j}]", "heat above cap")

    # stationary batteries
    storages = [es for b in model.buildings for es in b.storages]
    es_e = np.empty((N, T))
    for n, es in enumerate(storages):
        both = np.nonzero((dis.es_charge[n] > 1e-9) & (dis.es_discharge[n] > 1e-9))[0]
        flag(((t, min(dis.es_charge[n, t], dis.es_discharge[n, t])) for t in both),
             f"es[{n}]", "simultaneous charge and discharge")
        over_c = np.nonzero(dis.es_charge[n] > es.p_charge_max + tol)[0]
        flag(((t, dis.es_charge[n, t] - es.p_charge_max) for t in over_c),
             f"es[{n}]", "charge above cap")
        over_d = np.nonzero(dis.es_discharge[n] > es.p_discharge_max + tol)[0]
        flag(((t, dis.es_discharge[n, t] - es.p_discharge_max) for t in over_d),
             f"es[{n}]", "discharge above cap")
        e = es.e_init
        for t in range(T):
            e = (e + dis.es_charge[n, t] * es.eta_charge * dt
                 - dis.es_discharge[n, t] * dt / es.eta_discharge)
            es_e[n, t] = e
            if e > es.e_max + tol:
                bad.append(ConstraintViolation(t, f"es[{n}]", "energy above cap",
                                               e - es.e_max))
            if e < es.e_min - tol:
                bad.append(ConstraintViolation(t, f"es[{n}]", "energy below floor",
                                               es.e_min - e))
        if N and abs(es_e[n, 0] - es_e[n, T - 1]) > tol:
            bad.append(ConstraintViolation(
                T - 1, f"es[{n}]", "cyclic energy condition missed",
                es_e[n, 0] - es_e[n, T - 1]))

    # balances
    power_residual = (
        dis.es_discharge.sum(axis=0) - dis.es_charge.sum(axis=0)
        + scenario.solar.sum(axis=0) + dis.grt_buy
        - dis.grt_sell - scenario.base_load - dis.ewh_l.sum(axis=0)
        - dis.hvac_p.sum(axis=0) - dis.pev_p.sum(axis=0)
    )
    zetas = np.array([w.zeta for _, w in ewhs])
    heat_sup = (zetas[:, None] * dis.ewh_l).sum(axis=0) * dt * units.KBTU_PER_KWH \
        + dis.boiler_h.sum(axis=0)
    heat_slack = heat_sup - scenario.heat_load

    big = np.nonzero(np.abs(power_residual) > tol)[0]
    flag(((t, power_residual[t]) for t in big), "campus", "power balance residual")
    short = np.nonzero(heat_slack < -tol)[0]
    flag(((t, heat_slack[t]) for t in short), "campus", "heat demand unserved")

    return Trajectory(
        hvac_state=hvac_state, hvac_power=dis.hvac_p.copy(), hvac_comfort=hvac_cmf,
        pev_energy=pev_e, pev_power=dis.pev_p.copy(), pev_comfort=pev_cmf,
        ewh_temp=ewh_c, ewh_power=dis.ewh_l.copy(), ewh_comfort=ewh_cmf,
        boiler_heat=dis.boiler_h.copy(), es_energy=es_e,
        power_residual=power_residual, heat_slack=heat_slack,
        violations=tuple(bad),
    )
