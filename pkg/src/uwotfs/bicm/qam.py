"""Gray-labelled square QAM mapping, max-log demapping and soft symbols.

Labeling: the first half of each symbol's bits select the in-phase level,
the second half the quadrature level. Per axis, level index ``i`` (counted
from the most positive level) carries the reflected Gray label ``i ^ (i >> 1)``
and amplitude ``P - 1 - 2 i`` before normalisation. For QPSK this gives
``00 -> (+1 + 1j) / sqrt(2)``; the full tables are in ``docs/constellations.md``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .coding import LLR_CLAMP


@dataclass(frozen=True)
class ConstellationConfig:
    order: int = 4
    symbol_energy: float = 1.0

    def __post_init__(self):
        if self.order not in (4, 16, 64):
            raise ValueError(f"constellation order must be 4, 16 or 64, got {self.order}")
        if self.symbol_energy <= 0:
            raise ValueError("symbol_energy must be positive")

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    @cached_property
    def points(self) -> np.ndarray:
        """Constellation points indexed by the integer value of their label (MSB first)."""
        half = self.bits_per_symbol // 2
        levels = 1 << half
        idx = np.arange(levels)
        amp = np.empty(levels)
        amp[idx ^ (idx >> 1)] = levels - 1 - 2 * idx  # amplitude by gray label
        norm = np.sqrt(2 * (levels**2 - 1) / 3 / self.symbol_energy)
        labels = np.arange(self.order)
        i_lab = labels >> half
        q_lab = labels & (levels - 1)
        return (amp[i_lab] + 1j * amp[q_lab]) / norm

    @cached_property
    def labels(self) -> np.ndarray:
        """(order, bits_per_symbol) bit table matching :attr:`points`."""
        m = self.bits_per_symbol
        return (np.arange(self.order)[:, None] >> np.arange(m - 1, -1, -1)) & 1


def map_symbols(bits, cfg: ConstellationConfig) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    m = cfg.bits_per_symbol
    if bits.shape[-1] % m:
        raise ValueError(f"bit length {bits.shape[-1]} is not divisible by {m}")
    groups = bits.reshape(*bits.shape[:-1], -1, m)
    index = groups @ (1 << np.arange(m - 1, -1, -1))
    return cfg.points[index]


def demap_llr(eq_symbols, post_eq_variance, cfg: ConstellationConfig, priors=None) -> np.ndarray:
    """Max-log extrinsic bit LLRs for Gaussian observations ``z = d + e``.

    ``post_eq_variance`` is the variance of ``e`` (scalar or per symbol).
    The prior of each bit is added to the metric and subtracted again from
    the output, so only the other bits' priors influence a given LLR.
    """
    z = np.asarray(eq_symbols, dtype=complex)
    var = np.broadcast_to(np.asarray(post_eq_variance, dtype=float), z.shape)
    if np.any(var <= 0) or not np.all(np.isfinite(var)):
        raise ValueError("post-equalisation variance must be positive and finite")
    m = cfg.bits_per_symbol
    labels = cfg.labels
    metric = -np.abs(z[..., None] - cfg.points) ** 2 / var[..., None]  # (..., J)
    if priors is not None:
        pri = np.asarray(priors, dtype=float).reshape(*z.shape, m)
        # +L/2 for bit 0, -L/2 for bit 1
        metric = metric + 0.5 * pri @ (1 - 2 * labels.T)
    out = np.empty((*z.shape, m))
    for b in range(m):
        zero = labels[:, b] == 0
        out[..., b] = metric[..., zero].max(-1) - metric[..., ~zero].max(-1)
    if priors is not None:
        out -= pri
    return np.clip(out.reshape(*z.shape[:-1], -1), -LLR_CLAMP, LLR_CLAMP)


def soft_symbols(llrs, cfg: ConstellationConfig) -> tuple[np.ndarray, np.ndarray]:
    """Mean and variance of each symbol under independent bit priors ``llrs``."""
    m = cfg.bits_per_symbol
    llrs = np.clip(np.asarray(llrs, dtype=float), -LLR_CLAMP, LLR_CLAMP)
    llrs = llrs.reshape(*llrs.shape[:-1], -1, m)
    # log P(bit) = -log(1 + exp(-+L)); combine into per-point log-probabilities
    signs = 1 - 2 * cfg.labels  # +1 for bit 0
    half = 0.5 * llrs
    logp = half @ signs.T - np.logaddexp(half, -half).sum(-1, keepdims=True)
    p = np.exp(logp)
    mean = p @ cfg.points
    var = p @ np.abs(cfg.points) ** 2 - np.abs(mean) ** 2
    return mean, np.maximum(var, 0.0)
