"""Scenario set construction from historical days.

A scenario is one joint realization of every uncertain series for one
operating day. Generation takes the Cartesian product of per-day draws over
four independent groups:

* prices       day-ahead buy/sell and real-time prices move together
* weather      solar output, irradiance, and outdoor temperature
* demand       electric base load, heat load, tank budgets and heat draws
* availability per-vehicle parking indicators

so ``days`` historical days yield ``days**4`` equally likely scenarios.
On top of the product, each scenario gets its own curtailment signal: one
uniform draw on [0.8, 1] applied during business hours (1.0 elsewhere),
derived deterministically from the generation seed. Large products are kept
in factored form and materialized scenario-by-scenario on demand.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .history import HistoricalDataset
from .model import TimeGrid

EXPORT_LIMIT = 20_000


class ScenarioError(ValueError):
    pass


@dataclass(eq=False)
class Scenario:
    """One fully materialized joint realization."""

    probability: float
    index: int
    da_buy: np.ndarray        # (T,) $/kWh
    da_sell: np.ndarray       # (T,) $/kWh
    rt_price: np.ndarray      # (T,) $/kWh
    solar: np.ndarray         # (M, T) kW
    outdoor_temp: np.ndarray  # (T,) degC
    irradiance: np.ndarray    # (T,) kW/m^2
    base_load: np.ndarray     # (T,) kW
    heat_load: np.ndarray     # (T,) kBtu per slot
    dr_signal: np.ndarray     # (T,) in [0.8, 1]
    availability: np.ndarray  # (K, T) 0/1
    ewh_budget: np.ndarray    # (J, T) kJ accrual
    ewh_heat_loss: np.ndarray # (J, T) kBtu per slot
    tag: str = ""

    @property
    def n_slots(self) -> int:
        return len(self.da_buy)

    # channel layout shared by normalization, distances, and CSV round trips
    def channels(self):
        yield "da_buy", self.da_buy[None, :]
        yield "da_sell", self.da_sell[None, :]
        yield "rt_price", self.rt_price[None, :]
        yield "solar", self.solar
        yield "outdoor_temp", self.outdoor_temp[None, :]
        yield "irradiance", self.irradiance[None, :]
        yield "base_load", self.base_load[None, :]
        yield "heat_load", self.heat_load[None, :]
        yield "ewh_budget", self.ewh_budget
        yield "ewh_heat_loss", self.ewh_heat_loss
        yield "availability", self.availability.astype(float)
        yield "dr_signal", self.dr_signal[None, :]


@dataclass(eq=False)
class ScenarioNorm:
    """Per-series scale factors (pooled standard deviations) for distances.

    A channel with zero spread carries no information and is skipped.
    """

    scales: dict[str, np.ndarray]

    def feature(self, s: Scenario) -> np.ndarray:
        parts = []
        for name, block in s.channels():
            sc = self.scales[name]
            keep = sc > 0
            if keep.any():
                parts.append((block[keep] / sc[keep, None]).ravel())
        return np.concatenate(parts)


def scenario_distance(a: Scenario, b: Scenario, norm: ScenarioNorm) -> float:
    """Euclidean distance between scale-normalized series concatenations."""
    total = 0.0
    for (name, ba), (_, bb) in zip(a.channels(), b.channels()):
        if ba.shape != bb.shape:
            raise ScenarioError(f"dimension mismatch in series {name!r}: "
                                f"{ba.shape} vs {bb.shape}")
        sc = norm.scales[name]
        keep = sc > 0
        if keep.any():
            diff = (ba[keep] - bb[keep]) / sc[keep, None]
            total += float((diff * diff).sum())
    return float(np.sqrt(total))


# ---------------------------------------------------------------------------
# the factored (product) representation

GROUP_FIELDS = {
    "prices": ("da_buy", "da_sell", "rt_price"),
    "weather": ("solar", "outdoor_temp", "irradiance"),
    "demand": ("base_load", "heat_load", "ewh_budget", "ewh_heat_loss"),
    "availability": ("availability",),
}
GROUP_ORDER = ("prices", "weather", "demand", "availability")


@dataclass(eq=False)
class ProductStructure:
    """Factored storage: per-group day indices plus the per-scenario signal."""

    hist: HistoricalDataset
    seed: int
    v: np.ndarray  # (N,) business-hour curtailment draw per scenario

    @property
    def days(self) -> int:
        return self.hist.days

    def day_indices(self, i: int) -> tuple[int, int, int, int]:
        d = self.days
        i, ia_rest = divmod(i, d ** 3)
        ib, rest = divmod(ia_rest, d ** 2)
        ic, idx = divmod(rest, d)
        return i, ib, ic, idx

    def group_index_arrays(self) -> tuple[np.ndarray, ...]:
        d = self.days
        n = d ** 4
        idx = np.arange(n)
        return (
            (idx // d ** 3).astype(np.int32),
            (idx // d ** 2 % d).astype(np.int32),
            (idx // d % d).astype(np.int32),
            (idx % d).astype(np.int32),
        )


def _hist_field_day(hist: HistoricalDataset, fname: str, day: int) -> np.ndarray:
    arr = getattr(hist, fname)[day]
    return arr if arr.ndim == 2 else arr[None, :]


class ScenarioSet:
    """Probability-weighted scenarios, materialized or in factored form."""

    def __init__(self, probabilities, provenance=None, scenarios=None, product=None):
        self.probabilities = np.asarray(probabilities, dtype=float)
        self.provenance = dict(provenance or {})
        self._scenarios = list(scenarios) if scenarios is not None else None
        self._product = product
        if (self._scenarios is None) == (self._product is None):
            raise ScenarioError("exactly one backing store required")
        if len(self.probabilities) == 0:
            raise ScenarioError("scenario set must be nonempty")
        if (self.probabilities <= 0).any():
            raise ScenarioError("scenario probabilities must be positive")
        total = float(self.probabilities.sum())
        if abs(total - 1.0) > 1e-9:
            raise ScenarioError(f"probabilities sum to {total!r}, expected 1")
        self._norm: ScenarioNorm | None = None

    def __len__(self) -> int:
        return len(self.probabilities)

    @property
    def is_product(self) -> bool:
        return self._product is not None

    @property
    def product(self) -> ProductStructure:
        if self._product is None:
            raise ScenarioError("set is materialized, no product structure")
        return self._product

    @property
    def time(self) -> TimeGrid:
        if self._product is not None:
            return self._product.hist.time
        s = self._scenarios[0]
        # materialized sets carry no grid; infer the common defaults
        return TimeGrid() if s.n_slots == 96 else None

    def scenario(self, i: int) -> Scenario:
        if self._scenarios is not None:
            return self._scenarios[i]
        p = self._product
        if not 0 <= i < len(self):
            raise IndexError(i)
        ia, ib, ic, idx = p.day_indices(i)
        h = p.hist
        T = h.time.slots_per_day
        dr = np.ones(T)
        dr[h.time.business_start_slot:h.time.business_end_slot] = p.v[i]
        return Scenario(
            probability=float(self.probabilities[i]),
            index=i,
            da_buy=h.da_buy[ia].copy(), da_sell=h.da_sell[ia].copy(),
            rt_price=h.rt_price[ia].copy(),
            solar=h.solar[ib].copy(), outdoor_temp=h.outdoor_temp[ib].copy(),
            irradiance=h.irradiance[ib].copy(),
            base_load=h.base_load[ic].copy(), heat_load=h.heat_load[ic].copy(),
            ewh_budget=h.ewh_budget[ic].copy(),
            ewh_heat_loss=h.ewh_heat_loss[ic].copy(),
            availability=h.availability[idx].copy(),
            dr_signal=dr,
            tag=f"p{ia:02d}.w{ib:02d}.d{ic:02d}.a{idx:02d}",
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self.scenario(i)

    def materialize(self) -> "ScenarioSet":
        if self._scenarios is not None:
            return self
        return ScenarioSet(self.probabilities, self.provenance,
                           scenarios=[self.scenario(i) for i in range(len(self))])

    # -- normalization ------------------------------------------------------

    @property
    def norm(self) -> ScenarioNorm:
        if self._norm is None:
            self._norm = self._compute_norm()
        return self._norm

    def _compute_norm(self) -> ScenarioNorm:
        scales: dict[str, np.ndarray] = {}
        if self._product is not None:
            h = self._product.hist
            for group, fields in GROUP_FIELDS.items():
                for fname in fields:
                    arr = getattr(h, fname).astype(float)
                    if arr.ndim == 2:  # (days, T) -> one channel
                        scales[fname] = np.array([arr.std()])
                    else:              # (days, C, T)
                        scales[fname] = arr.transpose(1, 0, 2).reshape(
                            arr.shape[1], -1).std(axis=1)
            T = h.time.slots_per_day
            nb = h.time.n_business
            v = self._product.v
            # pooled over scenarios x slots with off-business slots pinned at 1
            mean = (nb * v.mean() + (T - nb)) / T
            second = (nb * (v ** 2).mean() + (T - nb)) / T
            scales["dr_signal"] = np.array([np.sqrt(max(second - mean ** 2, 0.0))])
        else:
            blocks: dict[str, list[np.ndarray]] = {}
            for s in self._scenarios:
                for name, block in s.channels():
                    blocks.setdefault(name, []).append(block)
            for name, parts in blocks.items():
                stacked = np.stack(parts)  # (N, C, T)
                scales[name] = stacked.transpose(1, 0, 2).reshape(
                    stacked.shape[1], -1).std(axis=1)
        return ScenarioNorm(scales)


def generate(hist: HistoricalDataset, seed: int) -> ScenarioSet:
    """Enumerate the four-group day product and draw one signal per scenario."""
    if hist.days < 1:
        raise ScenarioError("empty dataset: at least one historical day required")
    n = hist.days ** 4
    rng = np.random.default_rng(seed)
    v = rng.uniform(0.8, 1.0, size=n)
    probabilities = np.full(n, 1.0 / n)
    return ScenarioSet(
        probabilities,
        provenance={
            "seed": int(seed),
            "source": "product",
            "days": int(hist.days),
            "groups": list(GROUP_ORDER),
        },
        product=ProductStructure(hist=hist, seed=int(seed), v=v),
    )


# ---------------------------------------------------------------------------
# CSV import/export

def export_scenarios(sset: ScenarioSet, directory) -> Path:
    """Write one CSV per scenario plus a manifest; small sets only."""
    if len(sset) > EXPORT_LIMIT:
        raise ScenarioError(
            f"refusing to export {len(sset)} scenarios; reduce the set first")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tags = []
    for i, s in enumerate(sset):
        tags.append(s.tag)
        cols: list[tuple[str, np.ndarray]] = []
        for name, block in s.channels():
            if block.shape[0] == 1:
                cols.append((name, block[0]))
            else:
                for c in range(block.shape[0]):
                    cols.append((f"{name}_{c + 1:02d}", block[c]))
        with open(directory / f"scenario_{i:05d}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["slot"] + [c[0] for c in cols])
            for t in range(s.n_slots):
                w.writerow([t] + [repr(float(c[1][t])) for c in cols])
    manifest = {
        "count": len(sset),
        "probabilities": [repr(float(p)) for p in sset.probabilities],
        "tags": tags,
        "provenance": sset.provenance,
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1))
    return path


def _split_block(cols: dict[str, np.ndarray], name: str) -> np.ndarray:
    if name in cols:
        return cols[name][None, :]
    sub = sorted(k for k in cols if k.startswith(name + "_"))
    if not sub:
        raise ScenarioError(f"scenario file missing series {name!r}")
    return np.stack([cols[k] for k in sub])


def import_scenarios(directory) -> ScenarioSet:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    probabilities = np.array([float(p) for p in manifest["probabilities"]])
    scenarios = []
    for i in range(manifest["count"]):
        path = directory / f"scenario_{i:05d}.csv"
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        data = np.array([[float(x) for x in r] for r in rows])
        cols = {name: data[:, ci] for ci, name in enumerate(header)}
        scenarios.append(Scenario(
            probability=float(probabilities[i]),
            index=i,
            da_buy=_split_block(cols, "da_buy")[0],
            da_sell=_split_block(cols, "da_sell")[0],
            rt_price=_split_block(cols, "rt_price")[0],
            solar=_split_block(cols, "solar"),
            outdoor_temp=_split_block(cols, "outdoor_temp")[0],
            irradiance=_split_block(cols, "irradiance")[0],
            base_load=_split_block(cols, "base_load")[0],
            heat_load=_split_block(cols, "heat_load")[0],
            dr_signal=_split_block(cols, "dr_signal")[0],
            availability=_split_block(cols, "availability").astype(np.int8),
            ewh_budget=_split_block(cols, "ewh_budget"),
            ewh_heat_loss=_split_block(cols, "ewh_heat_loss"),
            tag=manifest["tags"][i],
        ))
    return ScenarioSet(probabilities, manifest.get("provenance"),
                       scenarios=scenarios)
