"""Unique-word MIMO channel estimation and the channel-error analysis.

Conventions
-----------
Received blocks are transformed with unitary DFTs. The data-block channel
``Lambda_m[k]`` is the plain (unnormalised) DFT of the equivalent taps, so
``Y_m = Lambda_m * X_m`` for a static channel. The UW reference ``X_UW`` is
the plain DFT of the ZC word (``|X_UW| = sqrt(n_uw)``), which makes the LS
output ``Y_UW / X_UW`` the unitary DFT of the composite UW taps.

All error variances are normalised to unit channel power and unit symbol
energy. ``sigma2_ce`` and ``sigma2_d`` refer to the composite (CDD-combined)
channel; each transmit antenna contributes ``1 / n_tx`` of them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_complex_array, check_positive
from .channel import ChannelProfile, jakes_correlation
from .waveform import FrameGeometry, gen_zc

REGULARIZATION = 1e-12


def uw_reference(n_uw: int) -> np.ndarray:
    """Plain DFT of the ZC unique word."""
    return np.fft.fft(gen_zc(n_uw))


def ls_estimate(Y_uw, X_uw) -> np.ndarray:
    """Element-wise LS estimate ``Y_UW / X_UW`` along the last axis."""
    X_uw = np.asarray(X_uw, dtype=complex)
    if np.any(X_uw == 0):
        raise ValueError("UW reference has a zero frequency bin")
    Y_uw = check_complex_array(Y_uw, trailing_shape=X_uw.shape, name="Y_uw")
    return Y_uw / X_uw


def split_per_antenna(lambda_uw, n_tx: int, K: int) -> np.ndarray:
    """Gate the UW impulse response per transmit antenna and move it to K bins.

    ``lambda_uw``: LS estimate ``(..., n_uw)``. Returns ``(..., n_tx, K)``
    where antenna ``nt`` keeps taps ``[nt g, (nt + 1) g)`` with ``g = n_uw / n_tx``.
    """
    lambda_uw = np.asarray(lambda_uw, dtype=complex)
    n_uw = lambda_uw.shape[-1]
    if n_uw % n_tx:
        raise ValueError(f"n_uw={n_uw} is not divisible by n_tx={n_tx}")
    gate = n_uw // n_tx
    if gate > K:
        raise ValueError(f"per-antenna gate {gate} is longer than the block length {K}")
    h = np.fft.ifft(lambda_uw, axis=-1, norm="ortho")
    gated = h.reshape(*h.shape[:-1], n_tx, gate)
    return np.fft.fft(gated, n=K, axis=-1)


def block_avg_correlation(offset_a: int, len_a: int, offset_b: int, len_b: int, doppler: float, bandwidth: float) -> float:
    """Mean of ``J0`` over all sample pairs of two blocks (tap correlation of their averages)."""
    if len_a <= 0 or len_b <= 0:
        raise ValueError("block lengths must be positive")
    counts = np.convolve(np.ones(len_a), np.ones(len_b))
    lags = offset_a - offset_b + np.arange(-(len_b - 1), len_a)
    return float(counts @ jakes_correlation(lags, doppler, bandwidth) / (len_a * len_b))


def estimation_noise_variance(noise_var: float, geom: FrameGeometry) -> float:
    """Per-bin noise of a per-antenna UW estimate, relative to its channel power.

    LS leaves ``noise_var / n_uw`` on every UW tap; the gate keeps
    ``n_uw / n_tx`` taps of an antenna whose channel carries ``1 / n_tx`` of the
    power.
    """
    gate = geom.n_uw // geom.n_tx
    return geom.n_tx * gate * noise_var / geom.n_uw


def wiener_coeffs(m: int, geom: FrameGeometry, profile: ChannelProfile, noise_var: float) -> tuple[np.ndarray, float]:
    """Interpolation weights on the two UW estimates for block ``m``.

    Returns ``(C_m, sigma2_ce)`` where ``sigma2_ce`` is the composite-channel
    MSE of the interpolated block-averaged response.
    """
    check_positive(noise_var, "noise_var", strict=False)
    fd, bw = profile.doppler, profile.bandwidth
    offs = [geom.uw_offset(u) for u in (0, 1)]
    dm = geom.block_offset(m)
    R = np.array([[block_avg_correlation(a, geom.n_uw, b, geom.n_uw, fd, bw) for b in offs] for a in offs])
    R += estimation_noise_variance(noise_var, geom) * np.eye(2)
    R += REGULARIZATION * np.trace(R) / 2 * np.eye(2)
    r = np.array([block_avg_correlation(a, geom.n_uw, dm, geom.K, fd, bw) for a in offs])
    target = block_avg_correlation(dm, geom.K, dm, geom.K, fd, bw)
    coeffs = np.linalg.solve(R, r)
    return coeffs, max(target - float(r @ coeffs), 0.0)


def wiener_table(geom: FrameGeometry, profile: ChannelProfile, noise_var: float) -> tuple[np.ndarray, np.ndarray]:
    """``(C, sigma2_ce)`` for all blocks: shapes ``(M, 2)`` and ``(M,)``."""
    rows = [wiener_coeffs(m, geom, profile, noise_var) for m in range(geom.M)]
    return np.array([r[0] for r in rows]), np.array([r[1] for r in rows])


def interpolate(uw_estimates, coeffs) -> np.ndarray:
    """Per-block diagonal estimates from the two UW estimates.

    ``uw_estimates``: ``(..., 2, n_tx, K)``; ``coeffs``: ``(M, 2)``.
    Returns ``(..., M, n_tx, K)``.
    """
    uw_estimates = np.asarray(uw_estimates)
    coeffs = np.asarray(coeffs)
    if uw_estimates.shape[-3] != 2 or coeffs.shape[-1] != 2:
        raise ValueError("interpolation needs exactly two UW estimates")
    return np.einsum("mu,...utk->...mtk", coeffs, uw_estimates)


def reconstruct_miso(per_antenna, n_uw: int) -> np.ndarray:
    """Composite CDD channel from per-antenna estimates ``(..., n_tx, K)``.

    Each antenna's impulse response is truncated to ``n_uw / n_tx`` taps and
    placed at delay ``nt K / n_tx``.
    """
    per_antenna = np.asarray(per_antenna, dtype=complex)
    n_tx, K = per_antenna.shape[-2:]
    gate = n_uw // n_tx
    if gate > K // n_tx:
        raise ValueError(f"per-antenna gate {gate} does not fit in K / n_tx = {K // n_tx}")
    h = np.fft.ifft(per_antenna, axis=-1)[..., :gate]
    composite = np.zeros((*per_antenna.shape[:-2], K), dtype=complex)
    for nt in range(n_tx):
        start = nt * K // n_tx
        composite[..., start : start + gate] = h[..., nt, :]
    return np.fft.fft(composite, axis=-1)


def doppler_error_variance(K: int, profile: ChannelProfile) -> float:
    """ICI power of a K-sample block: unit tap power minus the block-averaged part."""
    return max(1.0 - block_avg_correlation(0, K, 0, K, profile.doppler, profile.bandwidth), 0.0)


@dataclass
class ChannelEstimate:
    response: np.ndarray  # (n_rx, M, K) composite diagonal estimate
    per_antenna: np.ndarray  # (n_rx, M, n_tx, K)
    uw_per_antenna: np.ndarray  # (n_rx, 2, n_tx, K)
    sigma2_ce: np.ndarray  # (M,)
    sigma2_d: float

    @property
    def n_tx(self) -> int:
        return self.per_antenna.shape[-2]

    @property
    def sigma2_ce_per_antenna(self) -> np.ndarray:
        return self.sigma2_ce / self.n_tx

    @property
    def sigma2_d_per_antenna(self) -> float:
        return self.sigma2_d / self.n_tx

    def effective_noise(self, noise_var: float) -> np.ndarray:
        """Per-block ``sigma^2 + sigma2_ce[m] + sigma2_d``."""
        return noise_var + self.sigma2_ce + self.sigma2_d


class UWChannelEstimator(BaseEstimator):
    """Unique-word LS + Wiener channel estimator for a CDD frame.

    ``fit`` precomputes the interpolation weights and error variances from the
    channel statistics (no training data is needed); ``predict`` turns the
    received UW spectra into per-block channel estimates.

    Parameters
    ----------
    geometry : FrameGeometry
    profile : ChannelProfile
        Power-delay profile and Doppler used for the Wiener design.
    noise_var : float
        Thermal noise variance per receive antenna.
    """

    def __init__(self, geometry: FrameGeometry = None, profile: ChannelProfile = None, noise_var: float = 1e-2):
        self.geometry = geometry
        self.profile = profile
        self.noise_var = noise_var

    def fit(self, X=None, y=None):
        geom = self.geometry if self.geometry is not None else FrameGeometry()
        if self.profile is None:
            raise ValueError("a channel profile is required")
        geom.check_channel_length(self.profile.L)
        if geom.K < geom.n_uw:
            raise ValueError(f"K={geom.K} is shorter than the UW ({geom.n_uw})")
        check_positive(self.noise_var, "noise_var", strict=False)
        self.geometry_ = geom
        self.coeffs_, self.sigma2_ce_ = wiener_table(geom, self.profile, self.noise_var)
        self.sigma2_d_ = doppler_error_variance(geom.K, self.profile)
        self.x_uw_ = uw_reference(geom.n_uw)
        return self

    def predict(self, Y_uw) -> ChannelEstimate:
        """``Y_uw``: unitary UW spectra ``(n_rx, 2, n_uw)``."""
        check_is_fitted(self, "coeffs_")
        geom = self.geometry_
        Y_uw = check_complex_array(Y_uw, trailing_shape=(2, geom.n_uw), name="Y_uw")
        lam = ls_estimate(Y_uw, self.x_uw_)
        uw_est = split_per_antenna(lam, geom.n_tx, geom.K)
        per_ant = interpolate(uw_est, self.coeffs_)
        return ChannelEstimate(
            response=reconstruct_miso(per_ant, geom.n_uw),
            per_antenna=per_ant,
            uw_per_antenna=uw_est,
            sigma2_ce=self.sigma2_ce_.copy(),
            sigma2_d=self.sigma2_d_,
        )


@dataclass
class FrameOptimization:
    best_M: int
    table: list  # rows (M, sigma2_ce, sigma2_d, sigma2_total)


def optimize_frame(
    N: int, candidate_Ms, template: FrameGeometry, profile: ChannelProfile, noise_var: float
) -> FrameOptimization:
    """Average channel-related errors per sub-block count and the best ``M``."""
    candidate_Ms = list(candidate_Ms)
    if not candidate_Ms:
        raise ValueError("no candidate sub-block counts given")
    rows = []
    for M in candidate_Ms:
        if N % M:
            raise ValueError(f"M={M} does not divide N={N}")
        geom = FrameGeometry(M=M, K=N // M, n_cp=template.n_cp, n_uw=template.n_uw, n_tx=template.n_tx)
        _, ce = wiener_table(geom, profile, noise_var)
        ce_avg = float(ce.mean())
        d = doppler_error_variance(geom.K, profile)
        rows.append((M, ce_avg, d, ce_avg + d))
    best = min(rows, key=lambda r: r[3])[0]
    return FrameOptimization(best, rows)


class FrameOptimizer(BaseEstimator):
    """Pick the sub-block count minimising ``sigma2_ce + sigma2_d``."""

    def __init__(self, N=288, candidate_Ms=(1, 2, 4, 6, 8), n_cp=16, n_uw=32, n_tx=2, profile=None, noise_var=1e-2):
        self.N = N
        self.candidate_Ms = candidate_Ms
        self.n_cp = n_cp
        self.n_uw = n_uw
        self.n_tx = n_tx
        self.profile = profile
        self.noise_var = noise_var

    def fit(self, X=None, y=None):
        if self.profile is None:
            raise ValueError("a channel profile is required")
        template = FrameGeometry(M=1, K=self.N, n_cp=self.n_cp, n_uw=self.n_uw, n_tx=self.n_tx)
        result = optimize_frame(self.N, self.candidate_Ms, template, self.profile, self.noise_var)
        self.best_M_ = result.best_M
        self.table_ = result.table
        return self
