"""Doubly selective MIMO Rayleigh channel with Jakes correlation and EVA profile.

Gains are stored as ``h[n, l, nt, nr]`` where ``n`` is the absolute sample
index of the frame (``n = 0`` is the first sample of the first UW's CP) and
``y[n] = sum_l h[n, l] x[n - l]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import j0

from .waveform import FrameGeometry, TxFrame

SPEED_OF_LIGHT = 299_792_458.0

# 3GPP TS 36.104 Extended Vehicular A: delays [ns], relative powers [dB]
EVA_DELAYS_NS = (0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0)
EVA_POWERS_DB = (0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9)

N_OSCILLATORS = 64


def doppler_frequency(carrier_hz: float, speed_mps: float) -> float:
    return carrier_hz * speed_mps / SPEED_OF_LIGHT


@dataclass(frozen=True)
class ChannelProfile:
    tap_delays: tuple[int, ...]
    tap_powers: tuple[float, ...]
    bandwidth: float = 4.32e6
    doppler: float = 0.0

    def __post_init__(self):
        if len(self.tap_delays) != len(self.tap_powers) or not self.tap_delays:
            raise ValueError("tap delays and powers must be non-empty and of equal length")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.doppler < 0:
            raise ValueError("Doppler frequency must be non-negative")
        if abs(sum(self.tap_powers) - 1.0) > 1e-12:
            raise ValueError("tap powers must sum to one")

    @property
    def L(self) -> int:
        return max(self.tap_delays) + 1

    @property
    def normalized_doppler(self) -> float:
        return self.doppler / self.bandwidth

    @property
    def pdp(self) -> np.ndarray:
        """Power per tap on the full ``0..L-1`` grid."""
        rho = np.zeros(self.L)
        rho[list(self.tap_delays)] = self.tap_powers
        return rho

    def with_doppler(self, doppler: float) -> "ChannelProfile":
        return ChannelProfile(self.tap_delays, self.tap_powers, self.bandwidth, doppler)


def jakes_correlation(delta_n, doppler: float, bandwidth: float):
    """Temporal correlation ``J0(2 pi dn fD / B)`` of every tap."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    return j0(2 * np.pi * np.asarray(delta_n, dtype=float) * doppler / bandwidth)


def build_eva_profile(bandwidth: float = 4.32e6, doppler: float = 0.0) -> ChannelProfile:
    """EVA taps binned to the sample grid (nearest sample, linear power sum), unit power."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    delays = np.rint(np.asarray(EVA_DELAYS_NS) * 1e-9 * bandwidth).astype(int)
    powers = 10 ** (np.asarray(EVA_POWERS_DB) / 10)
    binned = np.zeros(delays.max() + 1)
    np.add.at(binned, delays, powers)
    taps = np.flatnonzero(binned)
    rho = binned[taps] / binned[taps].sum()
    rho[-1] = 1.0 - rho[:-1].sum()
    return ChannelProfile(tuple(int(t) for t in taps), tuple(float(p) for p in rho), bandwidth, doppler)


def static_profile(taps) -> ChannelProfile:
    """Profile with explicit tap powers (normalised) and no Doppler."""
    taps = np.asarray(taps, dtype=float)
    nz = np.flatnonzero(taps)
    p = taps[nz] / taps[nz].sum()
    return ChannelProfile(tuple(int(i) for i in nz), tuple(float(v) for v in p))


@dataclass
class ChannelRealization:
    gains: np.ndarray  # (n_samples, L, n_tx, n_rx)
    profile: ChannelProfile
    seed: object = None

    @property
    def n_samples(self) -> int:
        return self.gains.shape[0]

    @property
    def n_tx(self) -> int:
        return self.gains.shape[2]

    @property
    def n_rx(self) -> int:
        return self.gains.shape[3]


@numba.njit(cache=True)
def _sum_of_sinusoids(coef, omega, n_samples, out):
    # coef, omega: (n_paths, n_osc); out: (n_samples, n_paths)
    n_paths, n_osc = coef.shape
    for p in range(n_paths):
        for i in range(n_osc):
            c = coef[p, i]
            rot = np.exp(1j * omega[p, i])
            z = c
            for n in range(n_samples):
                out[n, p] += z
                z *= rot


def generate_realization(
    profile: ChannelProfile, n_samples: int, n_tx: int = 1, n_rx: int = 1, seed=None
) -> ChannelRealization:
    """Draw one doubly selective MIMO realization.

    Each tap of each antenna pair is a sum of ``N_OSCILLATORS`` complex
    exponentials with Gaussian weights ``CN(0, rho_l / N_osc)`` and arrival
    angles ``2 pi (i + theta) / N_osc`` with a random offset ``theta``; the tap
    is exactly complex Gaussian and its autocorrelation over the offset is
    ``rho_l J0(2 pi dn fD / B)``.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    rng = np.random.default_rng(seed)
    taps = np.asarray(profile.tap_delays)
    rho = np.asarray(profile.tap_powers)
    n_paths = taps.size * n_tx * n_rx
    scale = np.sqrt(np.repeat(rho, n_tx * n_rx) / (2 * N_OSCILLATORS))[:, None]
    coef = scale * (rng.standard_normal((n_paths, N_OSCILLATORS)) + 1j * rng.standard_normal((n_paths, N_OSCILLATORS)))
    gains = np.zeros((n_samples, profile.L, n_tx, n_rx), dtype=complex)
    if profile.doppler == 0:
        path_gain = coef.sum(axis=1).reshape(taps.size, n_tx, n_rx)
        gains[:, taps] = path_gain[None]
    else:
        theta = rng.random((n_paths, 1))
        alpha = 2 * np.pi * (np.arange(N_OSCILLATORS) + theta) / N_OSCILLATORS
        omega = 2 * np.pi * profile.normalized_doppler * np.cos(alpha)
        out = np.zeros((n_samples, n_paths), dtype=complex)
        _sum_of_sinusoids(coef, omega, n_samples, out)
        gains[:, taps] = out.reshape(n_samples, taps.size, n_tx, n_rx)
    return ChannelRealization(gains, profile, seed)


def propagate(frame: TxFrame | np.ndarray, chan: ChannelRealization, noise_var: float = 0.0, seed=None) -> np.ndarray:
    """Time-varying convolution of every transmit stream plus AWGN.

    Returns ``(n_rx, frame_length)``; samples before the frame start are zero.
    """
    x = frame.samples if isinstance(frame, TxFrame) else np.asarray(frame)
    x = np.atleast_2d(x)
    n_tx, T = x.shape
    if chan.n_samples < T:
        raise ValueError(f"channel spans {chan.n_samples} samples, frame needs {T}")
    if chan.n_tx != n_tx:
        raise ValueError(f"channel has {chan.n_tx} transmit antennas, frame has {n_tx}")
    h = chan.gains[:T]
    L = h.shape[1]
    delayed = np.zeros((L, n_tx, T), dtype=complex)
    for l in range(L):
        delayed[l, :, l:] = x[:, : T - l]
    y = np.einsum("nltr,ltn->rn", h, delayed)
    if noise_var < 0:
        raise ValueError("noise variance must be non-negative")
    if noise_var > 0:
        rng = np.random.default_rng(seed)
        y = y + np.sqrt(noise_var / 2) * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    return y


def equivalent_siso_channel(
    chan: ChannelRealization, geom: FrameGeometry, *, block: int | None = None, uw: int | None = None
) -> np.ndarray:
    """CDD-equivalent SISO taps for a data block or a UW.

    Returns ``(n_rx, P, P)`` where ``[nr, n, l]`` is tap ``l`` at sample ``n``
    of the block (``P = K`` or ``n_uw``). The per-antenna cyclic delay and the
    ``1/sqrt(n_tx)`` CDD scaling are absorbed, so the block sees
    ``y[n] = sum_l h_eq[n, l] x[(n - l) mod P]`` with the un-spread samples.
    """
    if (block is None) == (uw is None):
        raise ValueError("give exactly one of block= or uw=")
    if block is not None:
        offset, P = geom.block_offset(block), geom.K
    else:
        offset, P = geom.uw_offset(uw), geom.n_uw
    n_tx = chan.n_tx
    L = chan.gains.shape[1]
    if L > P:
        raise ValueError(f"channel length {L} exceeds block length {P}")
    seg = chan.gains[offset : offset + P]  # (P, L, n_tx, n_rx)
    if seg.shape[0] < P:
        raise ValueError("channel realization does not span the requested block")
    h_eq = np.zeros((chan.n_rx, P, P), dtype=complex)
    for nt in range(n_tx):
        shift = nt * P // n_tx
        idx = (np.arange(L) + shift) % P
        h_eq[:, :, idx] += np.transpose(seg[:, :, nt, :], (2, 0, 1)) / np.sqrt(n_tx)
    return h_eq


def siso_block_response(h_eq: np.ndarray, x_block: np.ndarray) -> np.ndarray:
    """Apply time-varying circular taps ``h_eq[..., n, l]`` to one CP-free block."""
    P = x_block.shape[-1]
    n = np.arange(P)
    circ = x_block[..., (n[:, None] - n[None, :]) % P]  # [n, l] -> x[(n - l) mod P]
    return np.sum(h_eq * circ, axis=-1)


def block_average_response(chan: ChannelRealization, geom: FrameGeometry, *, block=None, uw=None) -> np.ndarray:
    """FD response of the time-averaged equivalent channel, ``(n_rx, P)``."""
    h_eq = equivalent_siso_channel(chan, geom, block=block, uw=uw)
    return np.fft.fft(h_eq.mean(axis=1), axis=-1)
