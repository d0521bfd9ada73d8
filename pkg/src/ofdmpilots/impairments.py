"""Carrier offset, intercarrier interference and common phase error.

Covers ICI coefficients, the Wiener CPE process, the equivalent phase noise of
additive noise on pilot resources, phase-difference measurements and the
joint LMMSE estimate of CFO and CPE.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, InvalidArgument, UnestimableError
from .grid import GridConfig, PilotLayout, PowerMap, demodulate


def ici_kernel(delta, K: int) -> np.ndarray:
    """g[..., d + K - 1] = (1/K) sum_n exp(j 2 pi (delta + d) n / K) for d = -(K-1)..K-1."""
    delta = np.asarray(delta, dtype=float)
    x = delta[..., None] + np.arange(-(K - 1), K)
    den = np.sinc(x / K)
    bad = np.abs(den) < 0.05
    g = np.exp(1j * np.pi * x * (K - 1) / K) * np.sinc(x) / np.where(bad, 1.0, den)
    if np.any(bad):
        # near nonzero multiples of K the ratio loses precision: sum directly
        n = np.arange(K)
        g[bad] = np.exp(2j * np.pi * x[bad][:, None] * n / K).mean(axis=-1)
    return g


def p_att_closed(delta, K: int):
    """|I_kk|^2 from the Dirichlet kernel, sin(pi d) / (K sin(pi d / K)) squared."""
    delta = np.asarray(delta, dtype=float)
    return (np.sinc(delta) / np.sinc(delta / K)) ** 2


@dataclass(frozen=True, eq=False)
class IciMatrix:
    """``coeffs[i, k]`` is the leakage from subcarrier i into subcarrier k."""

    coeffs: np.ndarray
    delta: float

    @property
    def K(self) -> int:
        return self.coeffs.shape[0]

    @property
    def p_att(self) -> float:
        return float(np.abs(self.coeffs[0, 0]) ** 2)

    @property
    def mixing(self) -> np.ndarray:
        """Output-by-input form: received bin k = sum_i mixing[k, i] * sent bin i."""
        return self.coeffs.T

    @property
    def leakage(self) -> np.ndarray:
        """sum_{i != k} |I_ik|^2 for each k."""
        c2 = np.abs(self.coeffs) ** 2
        return c2.sum(axis=0) - np.diag(c2)


def ici_coefficients(delta: float, K: int) -> IciMatrix:
    if not np.isfinite(delta):
        raise InvalidArgument("delta must be finite")
    g = ici_kernel(delta, K)
    i = np.arange(K)
    return IciMatrix(g[i[:, None] - i[None, :] + K - 1], float(delta))


def ici_power(ici, resource_power, channel_gain) -> np.ndarray:
    """Scalar ICI power per subcarrier, sum_{i != k} |I_ik|^2 * sigma_s^2[k] |h~_k|^2.

    ``ici`` is an :class:`IciMatrix` or an array of P_att values broadcastable
    against the leading axes (row Parseval gives a leakage of 1 - P_att).
    """
    if isinstance(ici, IciMatrix):
        leak = ici.leakage
    else:
        leak = 1.0 - np.asarray(ici, dtype=float)[..., None]
    return leak * np.asarray(resource_power) * np.asarray(channel_gain)


@dataclass(frozen=True)
class PhaseModel:
    """CPE increment variance per symbol and an optional fixed CFO (None draws uniformly)."""

    sigma2_phi: float = 0.018
    f_cfo: float | None = None

    def __post_init__(self):
        if self.sigma2_phi < 0:
            raise InvalidArgument("sigma2_phi must be nonnegative")

    def draw_cfo(self, rng: np.random.Generator, spacing: float, size=None):
        if self.f_cfo is not None:
            return np.full(size, float(self.f_cfo)) if size is not None else float(self.f_cfo)
        return rng.uniform(-spacing / 2, spacing / 2, size)


def cpe_prior(sigma2_phi: float, M: int) -> np.ndarray:
    m = np.arange(M)
    return sigma2_phi * np.minimum.outer(m, m).astype(float)


def sample_phase_trajectory(model: PhaseModel | float, M: int, rng: np.random.Generator,
                            size: int | None = None) -> np.ndarray:
    """Wiener CPE path starting at 0, shape ``(M,)`` or ``(size, M)``."""
    s2 = model.sigma2_phi if isinstance(model, PhaseModel) else float(model)
    shape = (M - 1,) if size is None else (size, M - 1)
    inc = np.sqrt(s2) * rng.standard_normal(shape)
    zero = np.zeros(shape[:-1] + (1,))
    return np.concatenate([zero, np.cumsum(inc, axis=-1)], axis=-1)


def symbol_phase_cov(kernel: np.ndarray, p_att, pilots: np.ndarray, resource_power: np.ndarray,
                     channel_gain: np.ndarray, noise_var) -> np.ndarray:
    """Equivalent phase-noise covariance on the pilot bins of one symbol.

    ``kernel`` comes from :func:`ici_kernel` and may carry batch axes, as may
    ``channel_gain`` (|h~|^2 over all K bins) and ``p_att``. Returns
    ``(..., n_pilots, n_pilots)``.
    """
    K = resource_power.shape[-1]
    cols = np.arange(K)
    idx = cols[None, :] - pilots[:, None] + K - 1
    rows = kernel[..., idx]  # (..., np, K): mixing[p, i]
    rows = np.where(cols[None, :] == pilots[:, None], 0.0, rows)
    q = resource_power * channel_gain  # (..., K)
    # only Re(R diag(q) R^H) is needed: stack real and imaginary parts
    rr = np.concatenate([rows.real, rows.imag], axis=-1)
    qq = np.concatenate([q, q], axis=-1)
    s_ici = (rr * qq[..., None, :]) @ np.swapaxes(rr, -1, -2)
    s_ici = 0.5 * (s_ici + np.swapaxes(s_ici, -1, -2))
    s_tot = s_ici + np.asarray(noise_var)[..., None, None] * np.eye(pilots.size)
    amp = np.sqrt(q[..., pilots])
    scale = 2 * np.asarray(p_att)[..., None, None] * (amp[..., :, None] * amp[..., None, :])
    return s_tot / scale


def phase_noise_covariance(power: PowerMap, h_freq: np.ndarray, ici: IciMatrix,
                           layout: PilotLayout, noise_var: float) -> list[np.ndarray]:
    """Per-symbol equivalent phase-noise covariance on pilot resources (one antenna).

    ``noise_var`` is the per-bin frequency-domain noise variance.
    """
    if ici.p_att <= 0:
        raise InvalidArgument("P_att must be positive")
    gain = np.abs(np.asarray(h_freq)) ** 2
    kernel = ici_kernel(ici.delta, layout.K)
    out = []
    for m in range(layout.M):
        p = layout.pilot_indices(m)
        if np.any(power.power[m, p] * gain[p] <= 0):
            raise InvalidArgument(f"zero pilot power on a measured resource of symbol {m}")
        out.append(symbol_phase_cov(kernel, ici.p_att, p, power.power[m], gain, noise_var))
    return out


def pilot_pairs(layout: PilotLayout) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(m, n, k) for every pilot with a later pilot on the same subcarrier; n is the nearest."""
    ms, ns, ks = [], [], []
    for k in range(layout.K):
        sym = np.flatnonzero(layout.mask[:, k])
        ms.extend(sym[:-1])
        ns.extend(sym[1:])
        ks.extend([k] * max(sym.size - 1, 0))
    order = np.lexsort((ks, ms))
    return (np.asarray(ms, dtype=int)[order], np.asarray(ns, dtype=int)[order],
            np.asarray(ks, dtype=int)[order])


def blockdiag_pilot_cov(blocks: list[np.ndarray], layout: PilotLayout) -> np.ndarray:
    """Place per-symbol pilot covariances into an (M*K, M*K) matrix (zeros off pilots)."""
    MK = layout.M * layout.K
    out = np.zeros((MK, MK))
    for m, b in enumerate(blocks):
        idx = m * layout.K + layout.pilot_indices(m)
        out[np.ix_(idx, idx)] = b
    return out


@dataclass(frozen=True, eq=False)
class MeasurementSystem:
    """Stacked phase differences y = t f_cfo + U phi + Z v_phi with cov(Z v_phi) = cov."""

    t: np.ndarray
    U: np.ndarray
    Z: np.ndarray
    cov: np.ndarray
    y: np.ndarray
    pairs: tuple

    @property
    def A(self) -> np.ndarray:
        return np.column_stack([self.t, self.U])

    @property
    def rows(self) -> int:
        return self.t.size


def design_rows(layout: PilotLayout, cfg: GridConfig):
    """t, U and Z (dense, over all M*K resources) for the pilot pairs of ``layout``."""
    m, n, k = pilot_pairs(layout)
    if m.size == 0:
        raise UnestimableError("unestimable-CFO: no pilot has a follow-on pilot on its subcarrier")
    r = np.arange(m.size)
    t = 2 * np.pi * cfg.T_sym * (n - m)
    U = np.zeros((m.size, layout.M))
    U[r, m] = -1.0
    U[r, n] = 1.0
    Z = np.zeros((m.size, layout.M * layout.K))
    Z[r, m * layout.K + k] = -1.0
    Z[r, n * layout.K + k] = 1.0
    return t, U, Z, (m, n, k)


def build_measurements(layout: PilotLayout, cfg: GridConfig, f_cfo: float, phi: np.ndarray,
                       phase_cov, rng: np.random.Generator) -> MeasurementSystem:
    """Draw phase-difference measurements.

    ``phase_cov`` is one (M*K, M*K) equivalent phase-noise covariance or a list
    of them, one per antenna; antennas contribute independent rows that share
    the CFO and CPE.
    """
    covs = [phase_cov] if np.ndim(phase_cov) == 2 else list(phase_cov)
    t, U, Z, pairs = design_rows(layout, cfg)
    m, n, k = pairs
    lo, hi = m * layout.K + k, n * layout.K + k
    ys, blocks = [], []
    for c in covs:
        # Z c Z' with Z holding -1 at lo and +1 at hi in each row
        c_d = c[np.ix_(hi, hi)] - c[np.ix_(hi, lo)] - c[np.ix_(lo, hi)] + c[np.ix_(lo, lo)]
        if np.any(c_d):
            noise = np.linalg.cholesky(c_d) @ rng.standard_normal(t.size)
        else:
            noise = np.zeros(t.size)
        ys.append(t * f_cfo + U @ phi + noise)
        blocks.append(c_d)
    n_ant = len(covs)
    cov = np.zeros((n_ant * t.size,) * 2)
    for a, b in enumerate(blocks):
        s = slice(a * t.size, (a + 1) * t.size)
        cov[s, s] = b
    return MeasurementSystem(np.tile(t, n_ant), np.tile(U, (n_ant, 1)), np.tile(Z, (n_ant, 1)),
                             cov, np.concatenate(ys), pairs)


@dataclass(frozen=True, eq=False)
class Residuals:
    eps_cfo: np.ndarray
    delta: np.ndarray
    eps_phi: np.ndarray
    eps_total: np.ndarray


def residuals(f_hat, phi_hat, f_cfo, phi, cfg: GridConfig) -> Residuals:
    """Estimation errors and the total residual rotation of each symbol."""
    eps_cfo = np.asarray(f_hat) - np.asarray(f_cfo)
    eps_phi = np.asarray(phi_hat) - np.asarray(phi)
    m = np.arange(eps_phi.shape[-1])
    eps_total = 2 * np.pi * cfg.T_sym * np.asarray(eps_cfo)[..., None] * m + eps_phi
    return Residuals(eps_cfo, eps_cfo * cfg.K * cfg.T_s, eps_phi, eps_total)


@dataclass(frozen=True, eq=False)
class EstimationResult:
    """beta = [f_cfo, phi[0..M-1]]; phi[0] is pinned to zero and carries no error."""

    beta: np.ndarray
    cov: np.ndarray

    @property
    def f_cfo(self) -> float:
        return float(self.beta[0])

    @property
    def phi(self) -> np.ndarray:
        return self.beta[1:]

    def residuals(self, f_cfo: float, phi: np.ndarray, cfg: GridConfig) -> Residuals:
        return residuals(self.f_cfo, self.phi, f_cfo, phi, cfg)


def reduced_design(A: np.ndarray, sigma2_phi: float):
    """Drop the pinned phi[0] column (and all CPE columns when sigma2_phi is 0).

    Returns the reduced design, its prior weight and the kept parameter indices.
    """
    M = A.shape[1] - 1
    if sigma2_phi > 0:
        keep = np.r_[0, 2:M + 1]
        W = np.zeros((M, M))
        W[1:, 1:] = np.linalg.inv(cpe_prior(sigma2_phi, M)[1:, 1:])
    else:
        keep = np.array([0])
        W = np.zeros((1, 1))
    return A[:, keep], W, keep


def _check_information(J: np.ndarray, names: list[str]):
    w, v = np.linalg.eigh(J)
    if w[0] <= 1e-12 * max(w[-1], 1e-300):
        weak = [names[i] for i in np.flatnonzero(np.abs(v[:, 0]) > 0.1)]
        raise UnestimableError(f"unestimable-parameters: information matrix singular along {weak}")


def lmmse_cfo_cpe(sys: MeasurementSystem, sigma2_phi: float) -> EstimationResult:
    """Diffuse-prior LMMSE of CFO and CPE from stacked phase differences."""
    A, W, keep = reduced_design(sys.A, sigma2_phi)
    try:
        L = np.linalg.cholesky(sys.cov)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError("measurement covariance is not positive definite") from exc
    Aw = np.linalg.solve(L, A)
    yw = np.linalg.solve(L, sys.y)
    J = W + Aw.T @ Aw
    names = ["f_cfo"] + [f"phi[{m}]" for m in keep[1:] - 1]
    _check_information(J, names)
    cov_r = np.linalg.inv(J)
    cov_r = (cov_r + cov_r.T) / 2
    est_r = cov_r @ (Aw.T @ yw)
    M = sys.U.shape[1]
    beta = np.zeros(M + 1)
    cov = np.zeros((M + 1, M + 1))
    beta[keep] = est_r
    cov[np.ix_(keep, keep)] = cov_r
    return EstimationResult(beta, cov)


def apply_impairments(x: np.ndarray, f_cfo: float, phi: np.ndarray, cfg: GridConfig) -> np.ndarray:
    """Rotate received samples by the CFO ramp and a per-symbol CPE (held over the CP)."""
    n = np.arange(x.shape[-1])
    ph = 2 * np.pi * f_cfo * cfg.T_s * (n - cfg.L_c) + np.repeat(phi, cfg.K_bar)
    return x * np.exp(1j * ph)


def apply_corrections(x: np.ndarray, est: EstimationResult, cfg: GridConfig) -> np.ndarray:
    """De-rotate by the CFO estimate, demodulate, then remove each symbol's CPE estimate."""
    n = np.arange(x.shape[-1])
    y = x * np.exp(-2j * np.pi * est.f_cfo * cfg.T_s * (n - cfg.L_c))
    return demodulate(y, cfg) * np.exp(-1j * est.phi)[:, None]
