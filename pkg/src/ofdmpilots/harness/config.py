"""Scenario configuration: TOML schema, defaults and validation."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import tomli

from ..channel import ChannelSpec
from ..errors import InvalidArgument
from ..grid import GridConfig, PilotLayout, build_equally_spaced, build_outer_most
from ..impairments import PhaseModel

SCHEMA_VERSION = 1

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "id": "default",
    "grid": {"K": 72, "cp_len": 18, "M": 9, "fs": 2.16e6, "fc": 3.5e9},
    "pilots": {"scheme": "equally_spaced", "dp_sym": 2, "dp_sc": 8, "n_p": 8, "alpha": 0.875,
               "p_total": 1.0, "seed": 0, "stagger": 0},
    "channel": {"kind": "rayleigh", "order": 2, "profile": None, "n_rx": 1, "gain": 1.0},
    "phase": {"sigma2_phi": 0.018, "f_cfo": "uniform"},
    "link": {"eps_max_deg": 15.0, "c_min": 0.25},
    "ranging": {"mode": "known", "draws": 500, "step_div": 64, "t_a": None},
    "run": {"snr_db": [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0], "trials": 2000, "seed": 1,
            "threads": 1},
    "pareto": {"layout_params": [2, 4, 8, 12],
               "alpha": [round(0.1 + 0.05 * i, 2) for i in range(17)]},
    "symtime": {"dp_sym": [1, 2, 4, 8]},
}


def _merge(base: dict, user: dict, path: str = "") -> dict:
    out = dict(base)
    for key, val in user.items():
        where = f"{path}{key}"
        if key not in base:
            raise InvalidArgument(f"unknown config key '{where}'")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise InvalidArgument(f"config key '{where}' must be a table")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = val
    return out


@dataclass(frozen=True)
class Scenario:
    """A fully resolved experiment description."""

    id: str
    grid: GridConfig
    scheme: str
    dp_sym: int
    dp_sc: int
    n_p: int
    alpha: float
    p_total: float
    pilot_seed: int
    stagger: int
    channel: ChannelSpec
    phase: PhaseModel
    eps_max: float
    c_min: float
    ranging_mode: str
    ranging_draws: int
    step_div: int
    t_a: float
    snr_db: tuple[float, ...]
    trials: int
    seed: int
    threads: int
    pareto_params: tuple[int, ...] = ()
    pareto_alpha: tuple[float, ...] = ()
    symtime_dp_sym: tuple[int, ...] = ()

    @property
    def layout_param(self) -> int:
        return self.dp_sc if self.scheme == "equally_spaced" else self.n_p

    def layout(self, param: int | None = None, dp_sym: int | None = None) -> PilotLayout:
        p = self.layout_param if param is None else param
        if self.scheme == "equally_spaced":
            return build_equally_spaced(self.grid, self.dp_sym if dp_sym is None else dp_sym, p,
                                        self.pilot_seed, self.stagger)
        return build_outer_most(self.grid, p, self.pilot_seed)

    def with_(self, **kw) -> "Scenario":
        return replace(self, **kw)


def _channel(c: dict) -> ChannelSpec:
    if c["kind"] == "awgn":
        return ChannelSpec.awgn(complex(c["gain"]), int(c["n_rx"]))
    if c["kind"] == "rayleigh":
        prof = None if c["profile"] is None else np.asarray(c["profile"], dtype=float)
        return ChannelSpec.rayleigh(int(c["order"]), 1.0, int(c["n_rx"]), prof)
    raise InvalidArgument(f"unknown channel kind {c['kind']!r}")


def scenario_from_dict(user: dict) -> Scenario:
    d = _merge(DEFAULTS, user)
    if d["schema_version"] != SCHEMA_VERSION:
        raise InvalidArgument(f"unsupported schema_version {d['schema_version']}")
    g = d["grid"]
    grid = GridConfig(int(g["K"]), int(g["cp_len"]), int(g["M"]), float(g["fs"]), float(g["fc"]))
    p = d["pilots"]
    if p["scheme"] not in ("equally_spaced", "outer_most"):
        raise InvalidArgument(f"unknown pilot scheme {p['scheme']!r}")
    ph = d["phase"]
    f_cfo = ph["f_cfo"]
    if isinstance(f_cfo, str):
        if f_cfo != "uniform":
            raise InvalidArgument("phase.f_cfo must be 'uniform' or a number")
        f_cfo = None
    r = d["ranging"]
    if r["mode"] not in ("known", "unknown", "both"):
        raise InvalidArgument(f"unknown ranging mode {r['mode']!r}")
    run = d["run"]
    snr = tuple(float(s) for s in np.atleast_1d(run["snr_db"]))
    if not snr:
        raise InvalidArgument("run.snr_db must not be empty")
    if int(run["trials"]) < 1 or int(run["threads"]) < 1:
        raise InvalidArgument("trials and threads must be at least 1")
    scn = Scenario(
        id=str(d["id"]), grid=grid, scheme=p["scheme"], dp_sym=int(p["dp_sym"]),
        dp_sc=int(p["dp_sc"]), n_p=int(p["n_p"]), alpha=float(p["alpha"]),
        p_total=float(p["p_total"]), pilot_seed=int(p["seed"]), stagger=int(p["stagger"]),
        channel=_channel(d["channel"]), phase=PhaseModel(float(ph["sigma2_phi"]), f_cfo),
        eps_max=float(np.deg2rad(d["link"]["eps_max_deg"])), c_min=float(d["link"]["c_min"]),
        ranging_mode=r["mode"], ranging_draws=int(r["draws"]), step_div=int(r["step_div"]),
        t_a=float(grid.L_c * grid.T_s if r["t_a"] is None else r["t_a"]),
        snr_db=snr, trials=int(run["trials"]), seed=int(run["seed"]), threads=int(run["threads"]),
        pareto_params=tuple(int(x) for x in d["pareto"]["layout_params"]),
        pareto_alpha=tuple(float(x) for x in d["pareto"]["alpha"]),
        symtime_dp_sym=tuple(int(x) for x in d["symtime"]["dp_sym"]),
    )
    if scn.channel.L_bar > grid.L_c:
        raise InvalidArgument("channel order exceeds the cyclic prefix")
    scn.layout()  # validates the pilot parameters
    return scn


def load_scenario(path) -> Scenario:
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except OSError as exc:
        raise InvalidArgument(f"cannot read config {path}: {exc.strerror}") from exc
    except tomli.TOMLDecodeError as exc:
        raise InvalidArgument(f"malformed config {path}: {exc}") from exc
    return scenario_from_dict(data)


def default_scenario(**overrides) -> Scenario:
    return scenario_from_dict({}).with_(**overrides)
