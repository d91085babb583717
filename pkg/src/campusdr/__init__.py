"""Campus demand-response scheduling under uncertainty.

Builds and solves the two-stage stochastic MILP that co-optimizes a
commercial campus's operating cost and occupant comfort: day-ahead market
bids in the first stage, per-scenario dispatch of HVAC, electric water
heaters, vehicle charging, batteries, and gas boilers in the second.
"""

__version__ = "0.1.0"

from .config import ConfigError, bundled_config, default_campus, load_campus_config, serialize_campus
from .dynamics import (
    HvacInput,
    HvacState,
    Trajectory,
    es_step,
    ewh_comfort,
    ewh_temperature,
    hvac_comfort,
    hvac_step,
    pev_comfort,
    pev_step,
    simulate_schedule,
)
from .history import HistoricalDataset, HistoryError, load_historical, synthetic_history, write_history_csv
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
    ValidationReport,
    validate,
)
from .reduction import kantorovich_distance, reduce_scenarios
from .scenarios import (
    Scenario,
    ScenarioError,
    ScenarioNorm,
    ScenarioSet,
    export_scenarios,
    generate,
    import_scenarios,
    scenario_distance,
)
from .schedule import Schedule, ScenarioDispatch
