"""OFDM/OTFS modulation, cyclic delay diversity, CP handling and UW framing.

Shift convention: a cyclic delay by ``s`` maps ``x[n]`` to ``x[(n - s) mod P]``
(``np.roll(x, s)``), i.e. circular convolution with a unit impulse at ``s``.
The same convention places per-antenna channels in the UW estimate and in
the reconstructed composite channel.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class WaveformKind(str, Enum):
    OFDM = "ofdm"
    OTFS = "otfs"


@dataclass(frozen=True)
class FrameGeometry:
    """Frame layout: ``[UW+CP | block_0+CP | ... | block_{M-1}+CP | UW+CP]``."""

    M: int = 4
    K: int = 72
    n_cp: int = 16
    n_uw: int = 32
    n_tx: int = 1

    def __post_init__(self):
        for name in ("M", "K", "n_cp", "n_uw", "n_tx"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.K % self.n_tx:
            raise ValueError(f"K={self.K} is not divisible by n_tx={self.n_tx}")
        if self.n_uw % self.n_tx:
            raise ValueError(f"n_uw={self.n_uw} is not divisible by n_tx={self.n_tx}")
        if self.n_cp >= min(self.K, self.n_uw):
            raise ValueError("CP must be shorter than both the data blocks and the UW")

    @property
    def N(self) -> int:
        return self.M * self.K

    @property
    def frame_length(self) -> int:
        return 2 * (self.n_uw + self.n_cp) + self.M * (self.K + self.n_cp)

    def block_offset(self, m: int) -> int:
        """First sample of data block ``m`` after its CP."""
        if not 0 <= m < self.M:
            raise IndexError(f"block index {m} out of range for M={self.M}")
        return 2 * self.n_cp + self.n_uw + m * (self.n_cp + self.K)

    def uw_offset(self, u: int) -> int:
        """First sample of UW ``u`` after its CP."""
        if u not in (0, 1):
            raise IndexError(f"UW index must be 0 or 1, got {u}")
        return self.n_cp + u * (self.n_uw + self.n_cp + self.M * (self.K + self.n_cp))

    def check_channel_length(self, L: int) -> None:
        """Raise if a channel of ``L`` taps breaks the CP or the UW antenna separation."""
        if self.n_cp < L - 1:
            raise ValueError(f"CP length {self.n_cp} is shorter than the channel memory {L - 1}")
        if self.n_uw // self.n_tx < L:
            raise ValueError(
                f"n_uw / n_tx = {self.n_uw // self.n_tx} < L = {L}: "
                "per-antenna channels overlap in the UW estimate"
            )


def _unitary_fft(x, axis=-1):
    return np.fft.fft(x, axis=axis, norm="ortho")


def _unitary_ifft(x, axis=-1):
    return np.fft.ifft(x, axis=axis, norm="ortho")


def modulate(d, kind: WaveformKind, geom: FrameGeometry) -> np.ndarray:
    """Time-domain samples ``x = A d`` of the M sub-blocks.

    OFDM: ``A = I_M (x) F_K^H``. OTFS: the symbols are precoded in the
    frequency domain by ``F_M (x) F_K`` and then OFDM-modulated, so
    ``A = (I_M (x) F_K^H)(F_M (x) F_K) = F_M (x) I_K`` and every symbol covers
    all subcarriers of all sub-blocks. Works on the last axis; leading axes
    are batch dimensions.
    """
    d = np.asarray(d, dtype=complex)
    if d.shape[-1] != geom.N:
        raise ValueError(f"expected {geom.N} symbols, got {d.shape[-1]}")
    blocks = d.reshape(*d.shape[:-1], geom.M, geom.K)
    if WaveformKind(kind) is WaveformKind.OFDM:
        x = _unitary_ifft(blocks)
    else:
        x = _unitary_fft(blocks, axis=-2)
    return x.reshape(d.shape)


def demodulate(x, kind: WaveformKind, geom: FrameGeometry) -> np.ndarray:
    """Adjoint (and inverse) of :func:`modulate`."""
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] != geom.N:
        raise ValueError(f"expected {geom.N} samples, got {x.shape[-1]}")
    blocks = x.reshape(*x.shape[:-1], geom.M, geom.K)
    if WaveformKind(kind) is WaveformKind.OFDM:
        d = _unitary_fft(blocks)
    else:
        d = _unitary_ifft(blocks, axis=-2)
    return d.reshape(x.shape)


def spreading_fd(kind: WaveformKind, geom: FrameGeometry):
    """Operators mapping symbols to per-block FD samples ``X_m = F_K x_m`` and back.

    This is the identity for OFDM and ``F_M (x) F_K`` for OTFS. Returns
    ``(spread, despread)`` acting on arrays whose last axis has length N.
    """
    kind = WaveformKind(kind)

    def spread(d):
        x = modulate(d, kind, geom)
        blocks = x.reshape(*x.shape[:-1], geom.M, geom.K)
        return _unitary_fft(blocks).reshape(x.shape)

    def despread(X):
        X = np.asarray(X, dtype=complex)
        blocks = _unitary_ifft(X.reshape(*X.shape[:-1], geom.M, geom.K))
        return demodulate(blocks.reshape(X.shape), kind, geom)

    return spread, despread


def cdd_spread(x_block, nt: int, n_tx: int) -> np.ndarray:
    """Antenna ``nt`` copy: cyclic delay by ``nt * P / n_tx`` scaled by ``1/sqrt(n_tx)``."""
    x_block = np.asarray(x_block)
    P = x_block.shape[-1]
    if P % n_tx:
        raise ValueError(f"block length {P} is not divisible by n_tx={n_tx}")
    if not 0 <= nt < n_tx:
        raise IndexError(f"antenna index {nt} out of range for n_tx={n_tx}")
    return np.roll(x_block, nt * P // n_tx, axis=-1) / np.sqrt(n_tx)


def add_cp(block, n_cp: int) -> np.ndarray:
    block = np.asarray(block)
    if not 0 <= n_cp < block.shape[-1]:
        raise ValueError(f"CP length {n_cp} must be shorter than the block ({block.shape[-1]})")
    return np.concatenate([block[..., block.shape[-1] - n_cp :], block], axis=-1)


def strip_cp(block, n_cp: int) -> np.ndarray:
    return np.asarray(block)[..., n_cp:]


def gen_zc(n_uw: int) -> np.ndarray:
    """Even-length Zadoff-Chu unique word ``exp(j pi n^2 / n_uw)``."""
    if n_uw <= 0 or n_uw % 2:
        raise ValueError(f"UW length must be even and positive, got {n_uw}")
    n = np.arange(n_uw)
    # reduce n^2 mod 2 n_uw before scaling to keep the phase exact for long UWs
    return np.exp(1j * np.pi * ((n * n) % (2 * n_uw)) / n_uw)


@dataclass
class TxFrame:
    """Per-antenna transmit samples, shape ``(n_tx, frame_length)``."""

    samples: np.ndarray
    geometry: FrameGeometry

    def block(self, m: int) -> np.ndarray:
        start = self.geometry.block_offset(m)
        return self.samples[..., start : start + self.geometry.K]

    def uw(self, u: int) -> np.ndarray:
        start = self.geometry.uw_offset(u)
        return self.samples[..., start : start + self.geometry.n_uw]


def assemble_frame(data_blocks, uw, geom: FrameGeometry) -> TxFrame:
    """Multiplex CP-prefixed blocks between two copies of the CP-prefixed UW.

    ``data_blocks``: ``(n_tx, M, K + n_cp)``; ``uw``: ``(n_tx, n_uw + n_cp)``.
    Leading batch axes are allowed in front of both.
    """
    data_blocks = np.asarray(data_blocks)
    uw = np.asarray(uw)
    if data_blocks.shape[-2:] != (geom.M, geom.K + geom.n_cp):
        raise ValueError(f"data blocks must have shape (..., {geom.M}, {geom.K + geom.n_cp})")
    if uw.shape[-1] != geom.n_uw + geom.n_cp:
        raise ValueError(f"UW must have length {geom.n_uw + geom.n_cp}")
    if uw.shape[:-1] != data_blocks.shape[:-2] or uw.shape[-2] != geom.n_tx:
        raise ValueError("UW and data blocks disagree on the antenna/batch axes")
    body = data_blocks.reshape(*data_blocks.shape[:-2], -1)
    return TxFrame(np.concatenate([uw, body, uw], axis=-1), geom)


def build_frame(d, kind: WaveformKind, geom: FrameGeometry) -> TxFrame:
    """Modulate ``d``, apply CDD per antenna and assemble the UW frame."""
    x = modulate(d, kind, geom)
    blocks = x.reshape(*x.shape[:-1], 1, geom.M, geom.K)
    uw = gen_zc(geom.n_uw)
    per_ant_blocks = np.stack([cdd_spread(blocks[..., 0, :, :], nt, geom.n_tx) for nt in range(geom.n_tx)], axis=-3)
    per_ant_uw = np.stack([cdd_spread(uw, nt, geom.n_tx) for nt in range(geom.n_tx)], axis=0)
    per_ant_uw = np.broadcast_to(add_cp(per_ant_uw, geom.n_cp), (*x.shape[:-1], geom.n_tx, geom.n_uw + geom.n_cp))
    return assemble_frame(add_cp(per_ant_blocks, geom.n_cp), per_ant_uw, geom)
