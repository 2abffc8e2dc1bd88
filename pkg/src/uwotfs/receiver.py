"""FD demultiplexing, MRC, MMSE-PIC equalisation and frame detection."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import bicm
from ._validation import check_complex_array
from .estimation import ChannelEstimate
from .waveform import FrameGeometry, WaveformKind, spreading_fd

# variance reported for symbols whose bins are all erased
ERASED_VARIANCE = 1e12


def fd_demux(rx, geom: FrameGeometry) -> tuple[np.ndarray, np.ndarray]:
    """Strip CPs and transform every block and UW with a unitary DFT.

    ``rx``: ``(..., n_rx, T)`` with ``T >= frame_length``.
    Returns ``Y`` of shape ``(..., n_rx, M, K)`` and ``Y_uw`` of shape
    ``(..., n_rx, 2, n_uw)``.
    """
    rx = np.asarray(rx, dtype=complex)
    if rx.shape[-1] < geom.frame_length:
        raise ValueError(f"received stream has {rx.shape[-1]} samples, frame needs {geom.frame_length}")
    starts = geom.block_offset(0) + np.arange(geom.M) * (geom.K + geom.n_cp)
    idx = starts[:, None] + np.arange(geom.K)
    Y = np.fft.fft(rx[..., idx], axis=-1, norm="ortho")
    uw_idx = np.array([geom.uw_offset(u) for u in (0, 1)])[:, None] + np.arange(geom.n_uw)
    Y_uw = np.fft.fft(rx[..., uw_idx], axis=-1, norm="ortho")
    return Y, Y_uw


def mrc_combine(Y, Lambda) -> tuple[np.ndarray, np.ndarray]:
    """Combine receive antennas (axis -3 of ``(n_rx, M, K)`` inputs) per bin.

    Returns ``(Y_eq, Lambda_eq)`` with ``Lambda_eq >= 0`` real; bins where
    every antenna's estimate is zero come out as ``Y_eq = 0, Lambda_eq = 0``.
    """
    Y = np.asarray(Y, dtype=complex)
    Lambda = np.asarray(Lambda, dtype=complex)
    if Y.shape != Lambda.shape:
        raise ValueError(f"observation shape {Y.shape} does not match channel shape {Lambda.shape}")
    lam_eq = np.sqrt(np.sum(np.abs(Lambda) ** 2, axis=-3))
    num = np.sum(np.conj(Lambda) * Y, axis=-3)
    y_eq = np.divide(num, lam_eq, out=np.zeros_like(num), where=lam_eq > 0)
    return y_eq, lam_eq


def mmse_pic_equalize(
    Y_eq,
    Lambda_eq,
    noise_eff,
    prior_mean,
    prior_var,
    kind: WaveformKind,
    geom: FrameGeometry,
) -> tuple[np.ndarray, np.ndarray]:
    """One MMSE-PIC pass on the combined per-bin model ``Y = Lambda X + W``.

    ``X`` holds the per-block FD samples of the spread symbols. The prior
    means of all symbols are cancelled, the residual is filtered per bin and
    despread. The returned means are unbiased (``z = d + e``) and the
    variances are those of ``e``, i.e. extrinsic with respect to each symbol's
    own prior. For OTFS the prior variances are averaged over the frame.

    For OFDM with zero priors the output is ``z = Y / Lambda`` and the
    biased scalar MMSE estimate is ``z * E_s / (E_s + var)``.
    """
    kind = WaveformKind(kind)
    Y_eq = check_complex_array(Y_eq, trailing_shape=(geom.M, geom.K), name="Y_eq")
    lam = np.abs(np.asarray(Lambda_eq, dtype=float)).reshape(geom.M, geom.K)
    noise = np.asarray(noise_eff, dtype=float)
    if noise.ndim == 1 and noise.size == geom.M:
        noise = noise[:, None]  # one value per block
    noise = np.broadcast_to(noise.reshape(noise.shape if noise.ndim <= 2 else (geom.M, geom.K)), (geom.M, geom.K))
    if np.any(noise <= 0) or not np.all(np.isfinite(noise)):
        raise ValueError("effective noise variance must be positive and finite")
    prior_mean = np.asarray(prior_mean, dtype=complex).reshape(geom.M, geom.K)
    prior_var = np.asarray(prior_var, dtype=float).reshape(geom.M, geom.K)
    if np.any(prior_var < 0):
        raise ValueError("prior variances must be non-negative")
    gain2 = lam**2

    if kind is WaveformKind.OFDM:
        # unspread: no interference between symbols, the estimate is the ZF output
        alive = lam > 0
        z = np.divide(Y_eq, lam, out=np.zeros_like(Y_eq), where=alive)
        var = np.divide(noise, gain2, out=np.full(noise.shape, ERASED_VARIANCE), where=alive)
        return z.ravel(), np.minimum(var, ERASED_VARIANCE).ravel()

    spread, despread = spreading_fd(kind, geom)
    v_bar = float(prior_var.mean())
    X_bar = spread(prior_mean.ravel()).reshape(geom.M, geom.K)
    filt = lam / (v_bar * gain2 + noise)
    mu = float(np.mean(filt * lam))
    if mu <= 0:
        n = geom.N
        return np.zeros(n, dtype=complex), np.full(n, ERASED_VARIANCE)
    residual = filt * (Y_eq - lam * X_bar)
    z = prior_mean.ravel() + despread(residual.ravel()) / mu
    var = max(1.0 / mu - v_bar, 1e-12)
    return z, np.full(geom.N, min(var, ERASED_VARIANCE))


@dataclass(frozen=True)
class DetectorConfig:
    kind: WaveformKind = WaveformKind.OTFS
    code: bicm.CodeConfig = field(default_factory=bicm.CodeConfig)
    constellation: bicm.ConstellationConfig = field(default_factory=bicm.ConstellationConfig)
    n_iter: int = 3
    interleaver_seed: int = 0


@dataclass
class Detection:
    info_bits: np.ndarray
    iteration_bits: list  # hard info decisions after each decoder call
    mi_proxy: list  # mean bit reliability of the decoder input per iteration
    decoder_calls: int


def _mi_proxy(llrs: np.ndarray) -> float:
    return float(1.0 - np.mean(np.logaddexp(0.0, -np.abs(llrs)) / np.log(2)))


def detect_frame(Y, estimate: ChannelEstimate, noise_var: float, cfg: DetectorConfig) -> Detection:
    """Detect one frame from its FD observations ``Y`` of shape ``(n_rx, M, K)``.

    OFDM runs equalise -> demap -> decode once. OTFS repeats the loop
    ``cfg.n_iter`` times, feeding decoder extrinsics back as soft symbols.
    """
    kind = WaveformKind(cfg.kind)
    M, K = estimate.response.shape[-2:]
    geom = FrameGeometry(M=M, K=K, n_cp=1, n_uw=2, n_tx=1)  # only M and K matter here
    const = cfg.constellation
    y_eq, lam_eq = mrc_combine(Y, estimate.response)
    noise_eff = np.maximum(estimate.effective_noise(noise_var), 1e-12)

    n_sym = M * K
    n_coded = n_sym * const.bits_per_symbol
    prior_mean = np.zeros(n_sym, dtype=complex)
    prior_var = np.full(n_sym, const.symbol_energy)
    priors = np.zeros(n_coded)
    n_iter = 1 if kind is WaveformKind.OFDM else max(int(cfg.n_iter), 1)
    iteration_bits, mi = [], []
    info = None
    for _ in range(n_iter):
        z, var = mmse_pic_equalize(y_eq, lam_eq, noise_eff, prior_mean, prior_var, kind, geom)
        ext = bicm.demap_llr(z, var, const, priors)
        code_llr = bicm.deinterleave(ext, cfg.interleaver_seed)
        mi.append(_mi_proxy(code_llr))
        dec_ext, info = bicm.decode_siso(code_llr, cfg.code)
        iteration_bits.append(info)
        priors = bicm.interleave(dec_ext, cfg.interleaver_seed)
        prior_mean, prior_var = bicm.soft_symbols(priors, const)
    return Detection(info, iteration_bits, mi, n_iter)


class MmsePicDetector(BaseEstimator):
    """Frame detector with the estimator interface.

    ``predict`` maps FD observations plus a channel estimate to information
    bits; nothing is learned, so ``fit`` only validates the parameters.
    """

    def __init__(self, kind="otfs", code_rate="1/2", order=4, n_iter=3, interleaver_seed=0):
        self.kind = kind
        self.code_rate = code_rate
        self.order = order
        self.n_iter = n_iter
        self.interleaver_seed = interleaver_seed

    def _config(self) -> DetectorConfig:
        from fractions import Fraction

        return DetectorConfig(
            kind=WaveformKind(self.kind),
            code=bicm.CodeConfig(rate=Fraction(self.code_rate)),
            constellation=bicm.ConstellationConfig(order=self.order),
            n_iter=self.n_iter,
            interleaver_seed=self.interleaver_seed,
        )

    def fit(self, X=None, y=None):
        self.config_ = self._config()
        return self

    def predict(self, Y, estimate: ChannelEstimate, noise_var: float) -> np.ndarray:
        cfg = getattr(self, "config_", None) or self._config()
        return detect_frame(Y, estimate, noise_var, cfg).info_bits
