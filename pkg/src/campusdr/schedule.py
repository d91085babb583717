"""Solved dispatch: first-stage market bids plus per-scenario device series.

A :class:`Schedule` separates the scenario-independent day-ahead positions
from the recourse dispatch of every device in every scenario. All values are
physical (kW, kWh, kBtu, degC); per-unit scaling only ever happens inside
objective/settlement arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import CampusModel


@dataclass(eq=False)
class ScenarioDispatch:
    """Second-stage series for one scenario."""

    grt_buy: np.ndarray     # (T,) kW
    grt_sell: np.ndarray    # (T,) kW
    psi_buy: np.ndarray     # (T,) kW, linearized |day-ahead - real-time| buy gap
    psi_sell: np.ndarray    # (T,) kW
    hvac_p: np.ndarray      # (B, T) kW electrical
    hvac_state: np.ndarray  # (B, 3, T) degC, end-of-slot states
    pev_p: np.ndarray       # (K, T) kW
    pev_e: np.ndarray       # (K, T) kWh, end-of-slot
    ewh_l: np.ndarray       # (J, T) kW
    ewh_c: np.ndarray       # (J, T) degC, end-of-slot
    boiler_h: np.ndarray    # (Jb, T) kBtu per slot
    es_charge: np.ndarray   # (N, T) kW
    es_discharge: np.ndarray  # (N, T) kW
    es_energy: np.ndarray   # (N, T) kWh, end-of-slot
    es_mode: np.ndarray     # (N, T) charge-enable binary
    hvac_j: np.ndarray | None = None  # (B, T) solver comfort values, NaN off-business
    pev_j: np.ndarray | None = None   # (K, T)
    ewh_j: np.ndarray | None = None   # (J, T)


@dataclass(eq=False)
class Schedule:
    """First-stage bids plus one dispatch block per scenario."""

    gda_buy: np.ndarray    # (T,) kW
    gda_sell: np.ndarray   # (T,) kW
    dispatches: tuple[ScenarioDispatch, ...]

    @property
    def n_scenarios(self) -> int:
        return len(self.dispatches)

    @property
    def n_slots(self) -> int:
        return len(self.gda_buy)

    @staticmethod
    def zeros(model: CampusModel, n_scenarios: int) -> "Schedule":
        """All-device-idle schedule; handy as a simulation baseline."""
        T = model.time.slots_per_day
        B = len(model.buildings)
        K = len(model.pevs)
        J = model.n_ewhs
        Jb = model.n_boilers
        N = model.n_storages

        def z(*shape):
            return np.zeros(shape)

        dispatches = []
        for _ in range(n_scenarios):
            state = np.empty((B, 3, T))
            # unforced states still evolve; callers overwrite as needed
            for bi, b in enumerate(model.buildings):
                state[bi] = np.tile(np.asarray(b.hvac.initial_state)[:, None], (1, T))
            pev_e = np.tile(
                np.array([p.e_init for p in model.pevs])[:, None], (1, T))
            es_e = np.tile(
                np.array([es.e_init for b in model.buildings
                          for es in b.storages])[:, None], (1, T))
            ewh_c = np.tile(
                np.array([w.temp_init for b in model.buildings
                          for w in b.ewhs])[:, None], (1, T))
            dispatches.append(ScenarioDispatch(
                grt_buy=z(T), grt_sell=z(T), psi_buy=z(T), psi_sell=z(T),
                hvac_p=z(B, T), hvac_state=state,
                pev_p=z(K, T), pev_e=pev_e,
                ewh_l=z(J, T), ewh_c=ewh_c,
                boiler_h=z(Jb, T),
                es_charge=z(N, T), es_discharge=z(N, T),
                es_energy=es_e, es_mode=z(N, T),
            ))
        return Schedule(gda_buy=z(T), gda_sell=z(T), dispatches=tuple(dispatches))
