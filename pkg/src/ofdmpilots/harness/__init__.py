from .config import Scenario, default_scenario, load_scenario, scenario_from_dict
from .output import emit_csv, to_csv
from .sweeps import (Row, SweepResult, best_per_param, run_bounds_sweep, run_pareto_sweep,
                     run_symbol_spacing_sweep)
