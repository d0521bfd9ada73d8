"""Channel-estimation error, effective SINR, capacity and outage."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .channel import ChannelSpec, draw_taps, freq_basis, freq_noise_var
from .grid import GridConfig, PilotLayout, PowerMap
from .impairments import (PhaseModel, design_rows, ici_kernel, p_att_closed, reduced_design,
                          sample_phase_trajectory, symbol_phase_cov)


@dataclass(frozen=True, eq=False)
class ChannelEstimate:
    err_var: np.ndarray  # (..., K)
    prior_var: float


def channel_est_error(layout: PilotLayout, power: PowerMap, spec: ChannelSpec, p_att,
                      noise_var: float) -> ChannelEstimate:
    """Per-subcarrier error variance of the tap-domain LMMSE channel estimate (one antenna).

    Every pilot resource observes sqrt(P_att) s~ h~_k in noise of variance
    ``noise_var`` (per frequency bin) plus the expected ICI power.
    ``p_att`` may be an array, giving a leading batch axis.
    """
    K = layout.K
    prior = spec.antenna_power
    p_att = np.asarray(p_att, dtype=float)[..., None, None]
    s2 = np.where(layout.mask, power.power, 0.0)
    w = p_att * s2 / (noise_var + (1 - p_att) * s2 * prior)
    c = w.sum(axis=-2)  # (..., K)
    E = freq_basis(K, spec.L_bar)
    J = np.einsum("kl,...k,km->...lm", E.conj(), c, E)
    sq = np.sqrt(spec.antenna_tap_var)
    inner = np.eye(spec.L_bar) + sq[:, None] * J * sq[None, :]
    post = sq[:, None] * np.linalg.inv(inner) * sq[None, :]
    err = np.einsum("kl,...lm,km->...k", E, post, E.conj()).real
    return ChannelEstimate(np.clip(err, 0.0, prior), prior)


def effective_sinr(err_var, prior_var, gamma, resource_power, p_ici, p_att, noise_var):
    """Per-resource SINR accounting for estimation error, residual ICI and attenuation."""
    num = (prior_var - err_var) * gamma
    den = err_var + (noise_var + p_ici) / (resource_power * p_att)
    return num / den


def mrc_sinr(rho, axis: int = 0) -> np.ndarray:
    return np.sum(rho, axis=axis)


@dataclass(frozen=True, eq=False)
class CapacitySample:
    capacity: np.ndarray
    usable: np.ndarray  # per-symbol indicator of tolerable residual rotation

    def outage(self, c_min: float) -> np.ndarray:
        return self.capacity < c_min


def instantaneous_capacity(sinr, eps_total, eps_max: float, cfg: GridConfig,
                           layout: PilotLayout) -> CapacitySample:
    """Capacity in bit/s/Hz of the block; ``sinr`` is (..., M, K) and ``eps_total`` (..., M)."""
    usable = np.abs(np.asarray(eps_total)) <= eps_max
    rate = np.where(~layout.mask, np.log2(1 + np.asarray(sinr)), 0.0).sum(axis=-1)
    c = np.sum(rate * usable, axis=-1) / (cfg.M * cfg.K_bar)
    return CapacitySample(c, usable)


@dataclass(frozen=True, eq=False)
class LinkScenario:
    """Everything the Monte Carlo link model needs for one design point."""

    cfg: GridConfig
    layout: PilotLayout
    power: PowerMap
    channel: ChannelSpec
    noise_var: float  # per time-domain sample
    phase: PhaseModel = field(default_factory=PhaseModel)
    eps_max: float = np.deg2rad(15.0)
    perfect_csi: bool = False


def _chunk(scn: LinkScenario, limit: float = 2e6) -> int:
    npil = max(int(scn.layout.mask.sum()), 1)
    return int(max(1, limit // (scn.channel.n_rx * npil * npil)))


def _batch_streams(seed: int, b: int) -> tuple[np.random.Generator, np.random.Generator]:
    world, meas = np.random.SeedSequence(seed, spawn_key=(b,)).spawn(2)
    return np.random.default_rng(world), np.random.default_rng(meas)


BATCH = 256


@dataclass(frozen=True, eq=False)
class LinkTrials:
    """Per-trial outputs of the link model."""

    capacity: np.ndarray  # (T,)
    eps_cfo: np.ndarray  # (T,) Hz
    eps_total: np.ndarray  # (T, M) rad
    f_cfo: np.ndarray  # (T,) Hz


def simulate_link(scn: LinkScenario, trials: int, seed: int = 0) -> LinkTrials:
    """Run ``trials`` independent blocks.

    Trials are grouped in fixed batches of ``BATCH``; batch b draws its
    channel, CFO and CPE from a stream that depends only on (seed, b), so
    design points evaluated with the same seed see the same realizations.
    """
    parts = []
    for b, start in enumerate(range(0, trials, BATCH)):
        n = min(BATCH, trials - start)
        world, meas = _batch_streams(seed, b)
        parts.append(_simulate_batch(scn, n, world, meas))
    return LinkTrials(*(np.concatenate(x) for x in zip(*parts)))


def simulate_capacity(scn: LinkScenario, trials: int, seed: int = 0) -> np.ndarray:
    return simulate_link(scn, trials, seed).capacity


def _simulate_batch(scn: LinkScenario, n: int, world, meas):
    cfg, lay, pw, ch = scn.cfg, scn.layout, scn.power, scn.channel
    K, M = cfg.K, cfg.M
    taps = draw_taps(ch, world, n)  # (n, R, L)
    f_cfo = np.asarray(scn.phase.draw_cfo(world, cfg.spacing, n), dtype=float)
    phi = sample_phase_trajectory(scn.phase, M, world, n)
    hf = taps @ freq_basis(K, ch.L_bar).T  # (n, R, K)
    gain = np.abs(hf) ** 2
    nv = freq_noise_var(scn.noise_var, K)
    if scn.perfect_csi:
        eps_cfo = np.zeros(n)
        eps_total = np.zeros((n, M))
        err = np.zeros((n, K))
    else:
        step = _chunk(scn)
        chunks = [_estimate_phase(scn, f_cfo[s:s + step], phi[s:s + step], gain[s:s + step], nv, meas)
                  for s in range(0, n, step)]
        eps_cfo = np.concatenate([c[0] for c in chunks])
        eps_total = np.concatenate([c[1] for c in chunks])
    p_att = p_att_closed(eps_cfo * K * cfg.T_s, K)
    if not scn.perfect_csi:
        err = channel_est_error(lay, pw, ch, p_att, nv).err_var
    gamma = gain / ch.antenna_power
    s2 = pw.power
    p_ici = (1 - p_att)[:, None, None, None] * s2 * gain[:, :, None, :]
    rho = effective_sinr(err[:, None, None, :], ch.antenna_power, gamma[:, :, None, :], s2,
                         p_ici, p_att[:, None, None, None], nv)
    cap = instantaneous_capacity(mrc_sinr(rho, axis=1), eps_total, scn.eps_max, cfg, lay).capacity
    return cap, eps_cfo, eps_total, f_cfo


def _estimate_phase(scn: LinkScenario, f_cfo, phi, gain, nv, rng):
    """LMMSE CFO/CPE estimation for a batch; returns residual delta and total rotation."""
    cfg, lay, pw = scn.cfg, scn.layout, scn.power
    K, M = cfg.K, cfg.M
    n, R = gain.shape[:2]
    delta0 = f_cfo * K * cfg.T_s
    kern = ici_kernel(delta0, K)[:, None, :]  # (n, 1, 2K-1)
    p0 = p_att_closed(delta0, K)[:, None]
    t, U, Z, (pm, pn, pk) = design_rows(lay, cfg)
    # covariance of all pilot phase noises, ordered like the mask (row-major)
    pil = np.flatnonzero(lay.mask.reshape(-1))
    pos = np.full(M * K, -1)
    pos[pil] = np.arange(pil.size)
    S = np.zeros((n, R, pil.size, pil.size))
    for m in range(M):
        p = lay.pilot_indices(m)
        if p.size == 0:
            continue
        blk = symbol_phase_cov(kern, p0, p, pw.power[m], gain, nv)
        ix = pos[m * K + p]
        S[..., ix[:, None], ix[None, :]] = blk
    D = Z[:, pil]
    cov = D @ S @ D.T  # (n, R, rows, rows)
    L = np.linalg.cholesky(cov)
    noise = (L @ rng.standard_normal((n, R, t.size, 1)))[..., 0]
    y = t * f_cfo[:, None, None] + np.einsum("rm,nm->nr", U, phi)[:, None, :] + noise
    A, W, keep = reduced_design(np.column_stack([t, U]), scn.phase.sigma2_phi)
    rhs = np.concatenate([np.broadcast_to(A, (n, R) + A.shape), y[..., None]], axis=-1)
    sol = np.linalg.solve(cov, rhs)
    AtS = np.einsum("rp,narq->npq", A, sol)  # (n, P, P+1)
    J = W + AtS[..., :-1]
    est = np.linalg.solve(J, AtS[..., -1:])[..., 0]
    beta = np.zeros((n, M + 1))
    beta[:, keep] = est
    eps_cfo = beta[:, 0] - f_cfo
    eps_phi = beta[:, 1:] - phi
    eps_total = 2 * np.pi * cfg.T_sym * eps_cfo[:, None] * np.arange(M) + eps_phi
    return eps_cfo, eps_total


def ergodic_capacity(scn: LinkScenario, trials: int, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo mean capacity and its standard error."""
    c = simulate_capacity(scn, trials, seed)
    se = c.std(ddof=1) / np.sqrt(c.size) if c.size > 1 else 0.0
    return float(c.mean()), float(se)


def wilson_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    z = norm.ppf(0.5 + level / 2)
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return float(max(mid - half, 0.0)), float(min(mid + half, 1.0))


def outage_probability(scn: LinkScenario, c_min: float, trials: int, seed: int = 0,
                       samples: np.ndarray | None = None) -> tuple[float, float, float]:
    """Fraction of blocks below ``c_min`` with a 95% Wilson interval."""
    c = simulate_capacity(scn, trials, seed) if samples is None else np.asarray(samples)
    k = int(np.sum(c < c_min))
    lo, hi = wilson_interval(k, c.size)
    return k / c.size, lo, hi
