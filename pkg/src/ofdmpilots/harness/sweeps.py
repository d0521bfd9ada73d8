"""Experiment sweeps over SNR, pilot layouts and power splits."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..capacity import LinkScenario, simulate_capacity, wilson_interval
from ..channel import noise_var_for_snr
from ..grid import allocate_power, pilot_waveform
from ..zzb import (PminCurve, delay_grid, pmin_awgn_curve, pmin_known_curve, pmin_unknown_curve,
                   zzb_integral)
from .config import Scenario

RANGING_STREAM = 1 << 20


@dataclass(frozen=True)
class Row:
    scenario_id: str
    snr_db: float
    layout_kind: str
    layout_param: int
    alpha: float
    cap_mean_bpshz: float | None = None
    cap_stderr: float | None = None
    p_outage: float | None = None
    outage_ci_lo: float | None = None
    outage_ci_hi: float | None = None
    zzb_s2: float | None = None
    rmse_m: float | None = None
    ranging_mode: str = ""
    trials: int = 0
    seed: int = 0


@dataclass
class SweepResult:
    rows: list[Row] = field(default_factory=list)
    best: dict = field(default_factory=dict)  # snr_db -> (layout_param, alpha)

    def capacity_deltas(self, baseline: int = 1) -> dict:
        """Capacity minus that of ``layout_param == baseline`` at the same SNR."""
        base = {r.snr_db: r.cap_mean_bpshz for r in self.rows if r.layout_param == baseline}
        return {(r.snr_db, r.layout_param): r.cap_mean_bpshz - base[r.snr_db] for r in self.rows}


@dataclass(frozen=True)
class DesignPoint:
    snr_db: float
    layout_param: int
    alpha: float
    dp_sym: int


def _ranging_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(RANGING_STREAM,)))


def ranging_curve(scn: Scenario, pt: DesignPoint, mode: str) -> PminCurve:
    lay = scn.layout(pt.layout_param, pt.dp_sym)
    wf = pilot_waveform(lay, allocate_power(lay, pt.alpha, scn.p_total))
    nv = noise_var_for_snr(pt.snr_db, scn.channel, scn.p_total, scn.grid.K)
    zs = delay_grid(scn.grid, scn.t_a, scn.step_div)
    se = np.sqrt(nv / 2)
    if scn.channel.kind == "awgn":
        return pmin_awgn_curve(wf, zs, se, scn.channel.gain)
    if mode == "known":
        return pmin_known_curve(wf, zs, se, scn.channel, scn.ranging_draws, _ranging_rng(scn.seed))
    return pmin_unknown_curve(wf, zs, nv, scn.channel, _ranging_rng(scn.seed))


def _modes(scn: Scenario) -> list[str]:
    return ["known", "unknown"] if scn.ranging_mode == "both" else [scn.ranging_mode]


def _evaluate(scn: Scenario, pt: DesignPoint, kind: str, want_cap: bool, want_rng: bool) -> list[Row]:
    key = f"{scn.id} snr={pt.snr_db} param={pt.layout_param} alpha={pt.alpha}"
    try:
        base = dict(scenario_id=scn.id, snr_db=pt.snr_db, layout_kind=kind,
                    layout_param=pt.layout_param, alpha=pt.alpha, trials=scn.trials, seed=scn.seed)
        if want_cap:
            lay = scn.layout(pt.layout_param, pt.dp_sym)
            link = LinkScenario(scn.grid, lay, allocate_power(lay, pt.alpha, scn.p_total), scn.channel,
                                noise_var_for_snr(pt.snr_db, scn.channel, scn.p_total, scn.grid.K),
                                scn.phase, scn.eps_max)
            c = simulate_capacity(link, scn.trials, scn.seed)
            k = int(np.sum(c < scn.c_min))
            lo, hi = wilson_interval(k, c.size)
            se = float(c.std(ddof=1) / np.sqrt(c.size)) if c.size > 1 else 0.0
            base.update(cap_mean_bpshz=float(c.mean()), cap_stderr=se, p_outage=k / c.size,
                        outage_ci_lo=lo, outage_ci_hi=hi)
        if not want_rng:
            return [Row(**base)]
        rows = []
        for mode in _modes(scn):
            z = zzb_integral(ranging_curve(scn, pt, mode), scn.grid.T_s, scn.t_a)
            mode_name = "awgn" if scn.channel.kind == "awgn" else mode
            rows.append(Row(**base, zzb_s2=z.zzb, rmse_m=float(z.rmse), ranging_mode=mode_name))
        return rows
    except Exception as exc:
        try:
            annotated = type(exc)(f"[{key}] {exc}")
        except Exception:
            raise exc
        raise annotated from exc


def _run(scn: Scenario, points: list[DesignPoint], kind: str, want_cap: bool, want_rng: bool,
         threads: int | None) -> SweepResult:
    n = threads or scn.threads
    with ThreadPoolExecutor(max_workers=n) as pool:
        parts = list(pool.map(lambda p: _evaluate(scn, p, kind, want_cap, want_rng), points))
    rows = [r for part in parts for r in part]
    rows.sort(key=lambda r: (r.snr_db, r.layout_param, r.alpha, r.ranging_mode))
    return SweepResult(rows)


def _default_point(scn: Scenario, snr: float) -> DesignPoint:
    return DesignPoint(snr, scn.layout_param, scn.alpha, scn.dp_sym)


def run_bounds_sweep(scn: Scenario, threads: int | None = None, capacity: bool = True,
                     ranging: bool = True) -> SweepResult:
    """Capacity, outage and ranging RMSE of the configured design at every SNR."""
    pts = [_default_point(scn, s) for s in scn.snr_db]
    return _run(scn, pts, scn.scheme, capacity, ranging, threads)


def run_pareto_sweep(scn: Scenario, layout_params=None, alphas=None, threads: int | None = None,
                     ranging: bool = True) -> SweepResult:
    """Cross product of layout parameter and data-power fraction at every SNR."""
    params = scn.pareto_params if layout_params is None else tuple(layout_params)
    alphas = scn.pareto_alpha if alphas is None else tuple(alphas)
    if not params or not alphas:
        raise ValueError("pareto grids must be non-empty")
    pts = [DesignPoint(s, p, a, scn.dp_sym) for s in scn.snr_db for p in params for a in alphas]
    res = _run(scn, pts, scn.scheme, True, ranging, threads)
    for s in scn.snr_db:
        cand = [r for r in res.rows if r.snr_db == s]
        top = max(cand, key=lambda r: r.cap_mean_bpshz)
        res.best[s] = (top.layout_param, top.alpha)
    return res


def best_per_param(res: SweepResult, snr_db: float) -> dict:
    """Capacity-maximising row of each layout parameter at one SNR."""
    out = {}
    for r in res.rows:
        if r.snr_db != snr_db:
            continue
        cur = out.get(r.layout_param)
        if cur is None or r.cap_mean_bpshz > cur.cap_mean_bpshz:
            out[r.layout_param] = r
    return out


def run_symbol_spacing_sweep(scn: Scenario, dp_syms=None, threads: int | None = None) -> SweepResult:
    """Capacity versus pilot spacing in time; ``layout_param`` holds dp_sym."""
    dp_syms = scn.symtime_dp_sym if dp_syms is None else tuple(dp_syms)
    pts = [DesignPoint(s, d, scn.alpha, d) for s in scn.snr_db for d in dp_syms]
    sub = scn.with_(scheme="equally_spaced")
    n = threads or scn.threads

    def one(pt):
        lay_scn = sub.with_(dp_sym=pt.dp_sym)
        p = DesignPoint(pt.snr_db, lay_scn.dp_sc, pt.alpha, pt.dp_sym)
        (row,) = _evaluate(lay_scn, p, "equally_spaced_dpsym", True, False)
        return Row(**{**row.__dict__, "layout_param": pt.dp_sym})

    with ThreadPoolExecutor(max_workers=n) as pool:
        rows = list(pool.map(one, pts))
    rows.sort(key=lambda r: (r.snr_db, r.layout_param))
    return SweepResult(rows)
