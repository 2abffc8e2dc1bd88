"""Monte-Carlo channel-error statistics to set against the analytic table."""
from __future__ import annotations

import numpy as np

from ..channel import block_average_response, equivalent_siso_channel, generate_realization, propagate
from ..estimation import UWChannelEstimator
from ..receiver import fd_demux
from ..waveform import WaveformKind, build_frame
from .config import SimConfig


def empirical_errors(cfg: SimConfig, M: int, frames: int | None = None, seed: int | None = None) -> tuple:
    """Measured ``(M, sigma2_ce, sigma2_d, sigma2_total)`` for ``M`` sub-blocks.

    ``sigma2_ce`` is the mean squared error of the interpolated estimate
    against the block-averaged channel; ``sigma2_d`` is the power each FD
    row loses to inter-carrier interference, i.e. the mean tap energy of the
    block minus that of the block-averaged taps. Both refer to the composite
    channel at the operating SNR of ``cfg``.
    """
    cfg = cfg.replace(M=M)
    geom, profile = cfg.geometry, cfg.profile
    frames = cfg.stats_frames if frames is None else frames
    noise_var = cfg.noise_variance(cfg.operating_snr_db)
    estimator = UWChannelEstimator(geom, profile, noise_var).fit()
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    n_samples = geom.frame_length + profile.L - 1
    ce = d = 0.0
    for _ in range(frames):
        chan = generate_realization(profile, n_samples, cfg.n_tx, cfg.n_rx, rng)
        symbols = np.exp(2j * np.pi * rng.random(geom.N))
        rx = propagate(build_frame(symbols, WaveformKind.OTFS, geom), chan, noise_var, rng)
        _, Y_uw = fd_demux(rx, geom)
        est = estimator.predict(Y_uw)
        for m in range(geom.M):
            truth = block_average_response(chan, geom, block=m)
            ce += np.mean(np.abs(est.response[:, m] - truth) ** 2)
            h = equivalent_siso_channel(chan, geom, block=m)
            d += np.mean(np.sum(np.abs(h) ** 2, axis=-1)) - np.mean(np.sum(np.abs(h.mean(axis=1)) ** 2, axis=-1))
    ce /= frames * geom.M
    d /= frames * geom.M
    return (M, float(ce), float(d), float(ce + d))
