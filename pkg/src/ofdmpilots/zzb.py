"""Ziv-Zakai bound on time-of-arrival error for pilot-only correlation receivers.

Shifts are circular and band-limited: a fractional delay is a linear phase
ramp over the centred DFT frequencies. Four detectors are provided: AWGN,
Rayleigh with a known channel (with or without MRC), and Rayleigh with an
unknown channel (a generalized chi-squared statistic).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .channel import ChannelSpec, draw_taps, freq_basis
from .errors import ConditioningError, InvalidArgument
from .grid import GridConfig, PilotWaveform
from .imhof import imhof_cdf, sample_cdf

C_LIGHT = 299792458.0


def centred_freqs(K: int) -> np.ndarray:
    return np.fft.fftfreq(K) * K


def fractional_shift(x: np.ndarray, z: float, axis: int = -1) -> np.ndarray:
    """Circularly delay ``x`` by ``z`` samples along ``axis``."""
    x = np.asarray(x)
    if float(z).is_integer():
        return np.roll(x, int(z), axis=axis)
    K = x.shape[axis]
    ramp = np.exp(-2j * np.pi * centred_freqs(K) * z / K)
    shape = [1] * x.ndim
    shape[axis] = K
    return np.fft.ifft(np.fft.fft(x, axis=axis) * ramp.reshape(shape), axis=axis)


def stack(b: np.ndarray) -> np.ndarray:
    """Real/imaginary stacking along the last axis."""
    return np.concatenate([b.real, b.imag], axis=-1)


def _pilot_time(pilots) -> np.ndarray:
    return pilots.time if isinstance(pilots, PilotWaveform) else np.atleast_2d(pilots)


def autocorr(pilots, z: float) -> float:
    """Sum over symbols of the real part of the circular autocorrelation at delay ``z``."""
    b = _pilot_time(pilots)
    return float(np.sum(np.real(np.conj(b) * fractional_shift(b, z))))


def autocorr_spectrum(energy: np.ndarray, zs) -> np.ndarray:
    """a(z) from per-subcarrier energy: (1/K) sum_k E_k cos(2 pi k z / K), k centred.

    ``energy`` may carry leading batch axes; the result is (..., len(zs)).
    """
    energy = np.asarray(energy, dtype=float)
    K = energy.shape[-1]
    cos = np.cos(2 * np.pi * np.outer(centred_freqs(K), np.atleast_1d(zs)) / K)
    return energy @ cos / K


def _q(x):
    return ndtr(-x)


def pmin_awgn(pilots, z: float, sigma_eta: float) -> float:
    """Minimum error probability between delays 0 and ``z`` for a known pilot in white noise."""
    if z == 0:
        return 0.5
    b = _pilot_time(pilots)
    shifted = fractional_shift(b, z)
    num = autocorr(b, 0) - autocorr(b, z)
    den = sigma_eta * np.sqrt(np.sum(np.abs(b - shifted) ** 2))
    if den == 0:
        return 0.5
    return float(_q(num / den))


def _pmin_from_gap(gap, sigma_eta, zs):
    """Q(sqrt(a0 - az) / (sqrt(2) sigma_eta)), exactly 1/2 at z = 0."""
    gap = np.maximum(gap, 0.0)
    p = _q(np.sqrt(gap) / (np.sqrt(2) * sigma_eta))
    return np.where(np.atleast_1d(zs) == 0, 0.5, p)


@dataclass(frozen=True, eq=False)
class PminCurve:
    zs: np.ndarray
    values: np.ndarray
    kind: str
    trials: int = 0
    fallbacks: int = 0


def pmin_awgn_curve(pilots: PilotWaveform, zs, sigma_eta: float, gain: complex = 1.0) -> PminCurve:
    e = pilots.energy * abs(gain) ** 2
    a = autocorr_spectrum(e, np.r_[0.0, zs])
    return PminCurve(np.asarray(zs), _pmin_from_gap(a[0] - a[1:], sigma_eta, zs), "awgn")


def pmin_known_curve(pilots: PilotWaveform, zs, sigma_eta: float, spec: ChannelSpec,
                     trials: int, rng: np.random.Generator) -> PminCurve:
    """Rayleigh, channel known at the receiver; antennas are combined coherently.

    The same ``trials`` channel draws are used at every offset.
    """
    K = pilots.freq.shape[-1]
    taps = draw_taps(spec, rng, trials)
    g = np.abs(taps @ freq_basis(K, spec.L_bar).T) ** 2  # (T, R, K)
    e = pilots.energy * g.sum(axis=1)
    a = autocorr_spectrum(e, np.r_[0.0, zs])
    p = _pmin_from_gap(a[:, :1] - a[:, 1:], sigma_eta, zs).mean(axis=0)
    kind = "known_mrc" if spec.n_rx > 1 else "known"
    return PminCurve(np.asarray(zs), p, kind, trials)


def pmin_rayleigh_known(pilots, z: float, sigma_eta: float, spec: ChannelSpec, trials: int,
                        rng: np.random.Generator) -> float:
    return float(pmin_known_curve(pilots, [z], sigma_eta, spec, trials, rng).values[0])


def pmin_rayleigh_mrc(pilots, z: float, sigma_eta: float, spec: ChannelSpec, trials: int,
                      rng: np.random.Generator) -> float:
    return pmin_rayleigh_known(pilots, z, sigma_eta, spec, trials, rng)


def real_embed(A: np.ndarray) -> np.ndarray:
    return np.block([[A.real, -A.imag], [A.imag, A.real]])


@dataclass(frozen=True, eq=False)
class UnknownForm:
    """Real stacked covariances and the quadratic statistic x'Qx + offset."""

    cov: np.ndarray
    cov_z: np.ndarray
    Q: np.ndarray
    offset: float


MAX_DENSE = 4096


def unknown_covariances(B: list[np.ndarray], z: float, tap_cov: np.ndarray,
                        noise_var: float) -> UnknownForm:
    """Dense covariances of the stacked received pilots under delays 0 and ``z``.

    ``B`` holds one (K, L_bar) circulant pilot matrix per symbol.
    """
    Bz = [fractional_shift(b, z, axis=0) for b in B]
    n = sum(b.shape[0] for b in B)
    if 2 * n > MAX_DENSE:
        raise InvalidArgument(f"dense covariance of size {2 * n} exceeds {MAX_DENSE}")
    G = np.vstack(B)
    Gz = np.vstack(Bz)
    cov = real_embed(G @ tap_cov @ G.conj().T + noise_var * np.eye(n))
    cov_z = real_embed(Gz @ tap_cov @ Gz.conj().T + noise_var * np.eye(n))
    s1, ld1 = np.linalg.slogdet(cov)
    s2, ld2 = np.linalg.slogdet(cov_z)
    if s1 <= 0 or s2 <= 0:
        raise ConditioningError("covariance is not positive definite")
    Q = 0.5 * (np.linalg.inv(cov_z) - np.linalg.inv(cov))
    return UnknownForm(cov, cov_z, (Q + Q.T) / 2, 0.5 * (ld2 - ld1))


def _psd_sqrt(S: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(S)
    if w[0] <= 0:
        raise ConditioningError("covariance is not positive definite")
    return (V * np.sqrt(w)) @ V.conj().T


def _tail_prob(weights, x0, dof, rng, mc_draws):
    w = np.asarray(weights)
    scale = np.abs(w).max() if w.size else 0.0
    if scale <= 1e-13:
        if abs(x0) <= 1e-13:
            return 0.5, False
        return (1.0 if x0 > 0 else 0.0), False
    p, ok = imhof_cdf(w, x0, dof)
    if ok:
        return p, False
    rng = rng or np.random.default_rng(0)
    return sample_cdf(w, x0, mc_draws, rng, dof), True


def pmin_unknown(form: UnknownForm, rng: np.random.Generator | None = None,
                 mc_draws: int = 200_000) -> tuple[float, bool]:
    """P(x'Qx + offset < 0) for x ~ N(0, cov). Returns (probability, used_fallback)."""
    if not np.any(form.Q) and form.offset == 0:
        return 0.5, False
    S = _psd_sqrt(form.cov)
    lam = np.linalg.eigvalsh(S @ form.Q @ S)
    return _tail_prob(lam, -form.offset, None, rng, mc_draws)


def _gram_blocks(energy: np.ndarray, z: float, tap_sd: np.ndarray):
    K = energy.size
    kc = centred_freqs(K)
    E = freq_basis(K, tap_sd.size) * tap_sd  # (K, L)
    ramp = np.exp(-2j * np.pi * kc * z / K)
    e = energy / K
    g11 = E.conj().T @ (e[:, None] * E)
    g12 = E.conj().T @ ((e * ramp)[:, None] * E)
    return np.block([[g11, g12], [g12.conj().T, g11]])


def unknown_weights(energy: np.ndarray, z: float, tap_var: np.ndarray, noise_var: float):
    """Eigen-weights and offset of the unknown-channel statistic in complex form.

    The statistic equals sum_j lam_j |w_j|^2 + c with w_j ~ CN(0, 1). Only the
    span of the two signal subspaces matters, so the work is on a matrix of
    size at most 2 L_bar built from Gram sums over subcarriers.
    """
    sd = np.sqrt(np.asarray(tap_var, dtype=float))
    W = _gram_blocks(energy, z, sd)
    w, V = np.linalg.eigh(W)
    keep = w > 1e-12 * max(w[-1], 1e-300)
    R = np.sqrt(w[keep])[:, None] * V[:, keep].conj().T  # W = R^H R
    L = sd.size
    R1, R2 = R[:, :L], R[:, L:]
    r = R.shape[0]
    S = noise_var * np.eye(r) + R1 @ R1.conj().T
    Sz = noise_var * np.eye(r) + R2 @ R2.conj().T
    Sh = _psd_sqrt(S)
    mu = np.linalg.eigvalsh(Sh @ np.linalg.solve(Sz, Sh))
    c = np.linalg.slogdet(Sz)[1] - np.linalg.slogdet(S)[1]
    return mu - 1.0, float(c)


def pmin_unknown_curve(pilots: PilotWaveform, zs, noise_var: float, spec: ChannelSpec,
                       rng: np.random.Generator | None = None, mc_draws: int = 200_000) -> PminCurve:
    """Unknown Rayleigh channel with prior tap covariance; antennas are independent copies."""
    vals = np.empty(len(zs))
    fb = 0
    for i, z in enumerate(zs):
        if z == 0:
            vals[i] = 0.5
            continue
        lam, c = unknown_weights(pilots.energy, z, spec.antenna_tap_var, noise_var)
        lam = np.tile(lam, spec.n_rx)
        p, used = _tail_prob(lam / 2, -spec.n_rx * c, 2.0, rng, mc_draws)
        vals[i] = p
        fb += used
    return PminCurve(np.asarray(zs), vals, "unknown", 0, fb)


@dataclass(frozen=True)
class ZzbResult:
    zzb: float
    rmse: float


def delay_grid(cfg: GridConfig, T_a: float | None = None, step_div: int = 64) -> np.ndarray:
    """Offsets in samples covering [0, T_a] at step T_s/step_div (default T_a = cyclic prefix)."""
    span = cfg.L_c if T_a is None else T_a / cfg.T_s
    n = int(round(span * step_div))
    return np.arange(n + 1) / step_div


def zzb_integral(curve: PminCurve, T_s: float, T_a: float) -> ZzbResult:
    """Riemann sum of (1/T_a) int tau (T_a - tau) P_min d tau over the curve's grid."""
    tau = curve.zs * T_s
    if tau[-1] < T_a * (1 - 1e-9):
        raise InvalidArgument("delay grid does not cover the prior window")
    dtau = tau[1] - tau[0]
    zzb = float(np.sum(tau * (T_a - tau) * curve.values) * dtau / T_a)
    zzb = max(zzb, 0.0)
    return ZzbResult(zzb, C_LIGHT * np.sqrt(zzb))
