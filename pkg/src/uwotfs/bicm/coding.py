"""Recursive systematic convolutional code, puncturing and max-log BCJR.

Coded bits are laid out per trellis step as ``[sys_0, par_0, sys_1, par_1, ...]``.
LLRs use the convention ``LLR = log P(bit=0) / P(bit=1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numba
import numpy as np

LLR_CLAMP = 50.0

__all__ = [
    "LLR_CLAMP",
    "CodeConfig",
    "encode",
    "puncture",
    "depuncture",
    "decode_siso",
]


def _octal_taps(poly: int, constraint_length: int) -> np.ndarray:
    """Tap vector ``[g_0, ..., g_{K-1}]`` of an octal generator, MSB = current input."""
    bits = int(str(poly), 8)
    if bits >> constraint_length:
        raise ValueError(f"generator {poly} does not fit constraint length {constraint_length}")
    return np.array(
        [(bits >> (constraint_length - 1 - i)) & 1 for i in range(constraint_length)],
        dtype=np.int64,
    )


@dataclass(frozen=True)
class CodeConfig:
    """Rate-1/2 RSC mother code with optional rate-3/4 parity puncturing.

    ``generators[0]`` is the feedback polynomial, ``generators[1]`` the
    feedforward (parity) polynomial. ``puncture_pattern`` is applied
    periodically to the parity stream only; systematic bits always survive.
    """

    generators: tuple[int, int] = (133, 171)
    constraint_length: int = 7
    rate: Fraction = Fraction(1, 2)
    termination: str = "zero-tail"
    puncture_pattern: tuple[bool, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        rate = Fraction(self.rate)
        object.__setattr__(self, "rate", rate)
        if self.puncture_pattern is None:
            pattern = {Fraction(1, 2): (True,), Fraction(3, 4): (True, False, False)}.get(rate)
            if pattern is None:
                raise ValueError(f"unsupported code rate {rate}")
            object.__setattr__(self, "puncture_pattern", pattern)
        pattern = tuple(bool(p) for p in self.puncture_pattern)
        object.__setattr__(self, "puncture_pattern", pattern)
        if not any(pattern):
            raise ValueError("puncture pattern must keep at least one parity bit")
        if Fraction(len(pattern), len(pattern) + sum(pattern)) != rate:
            raise ValueError(f"puncture pattern {pattern} does not yield rate {rate}")
        if self.termination not in ("zero-tail", "truncated"):
            raise ValueError(f"unknown termination {self.termination!r}")

    @property
    def memory(self) -> int:
        return self.constraint_length - 1

    @property
    def n_states(self) -> int:
        return 1 << self.memory

    @property
    def tail_length(self) -> int:
        return self.memory if self.termination == "zero-tail" else 0

    @property
    def period(self) -> int:
        return len(self.puncture_pattern)

    def n_steps(self, n_info: int) -> int:
        return n_info + self.tail_length

    def coded_length(self, n_info: int) -> int:
        steps = self.n_steps(n_info)
        if steps % self.period:
            raise ValueError(
                f"trellis length {steps} is not a multiple of the puncture period {self.period}"
            )
        return int(steps / self.rate)

    def info_length(self, n_coded: int) -> int:
        """Number of information bits that fill ``n_coded`` punctured code bits."""
        steps = Fraction(n_coded) * self.rate
        if steps.denominator != 1 or steps % self.period:
            raise ValueError(f"{n_coded} coded bits do not fit rate {self.rate}")
        n_info = int(steps) - self.tail_length
        if n_info <= 0:
            raise ValueError(f"{n_coded} coded bits leave no room for information bits")
        return n_info

    @property
    def trellis(self) -> "_Trellis":
        return _trellis(self.generators, self.constraint_length)


@dataclass(frozen=True)
class _Trellis:
    next_state: np.ndarray  # (S, 2)
    parity: np.ndarray  # (S, 2)
    tail_input: np.ndarray  # (S,) input driving the register towards zero


_TRELLIS_CACHE: dict = {}


def _trellis(generators, constraint_length) -> _Trellis:
    key = (tuple(generators), constraint_length)
    if key in _TRELLIS_CACHE:
        return _TRELLIS_CACHE[key]
    fb = _octal_taps(generators[0], constraint_length)
    ff = _octal_taps(generators[1], constraint_length)
    memory = constraint_length - 1
    n_states = 1 << memory
    next_state = np.zeros((n_states, 2), dtype=np.int64)
    parity = np.zeros((n_states, 2), dtype=np.int64)
    tail_input = np.zeros(n_states, dtype=np.int64)
    for s in range(n_states):
        # bit i of the state (MSB first) holds a_{t-1-i}
        reg = [(s >> (memory - 1 - i)) & 1 for i in range(memory)]
        feedback = sum(fb[i + 1] * reg[i] for i in range(memory)) & 1
        tail_input[s] = feedback
        for u in (0, 1):
            a = u ^ feedback
            parity[s, u] = (ff[0] * a + sum(ff[i + 1] * reg[i] for i in range(memory))) & 1
            next_state[s, u] = (a << (memory - 1)) | (s >> 1)
    trellis = _Trellis(next_state, parity, tail_input)
    _TRELLIS_CACHE[key] = trellis
    return trellis


@numba.njit(cache=True)
def _encode_kernel(bits, next_state, parity, tail_input, n_tail):
    n = bits.shape[0]
    out = np.empty(2 * (n + n_tail), dtype=np.int8)
    s = 0
    for t in range(n + n_tail):
        u = bits[t] if t < n else tail_input[s]
        out[2 * t] = u
        out[2 * t + 1] = parity[s, u]
        s = next_state[s, u]
    return out


def encode(info_bits, cfg: CodeConfig = CodeConfig()) -> np.ndarray:
    """Encode and puncture ``info_bits``.

    Returns ``cfg.coded_length(len(info_bits))`` bits. With zero-tail
    termination the register flush adds ``cfg.memory`` trellis steps.
    """
    bits = np.asarray(info_bits, dtype=np.int64).ravel()
    if bits.size == 0:
        raise ValueError("info_bits must not be empty")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("info_bits must be binary")
    cfg.coded_length(bits.size)  # raises on a puncture-period mismatch
    tr = cfg.trellis
    mother = _encode_kernel(bits, tr.next_state, tr.parity, tr.tail_input, cfg.tail_length)
    return _puncture_mother(mother, cfg.puncture_pattern)


def _parity_mask(n_steps: int, pattern) -> np.ndarray:
    if n_steps % len(pattern):
        raise ValueError(f"{n_steps} parity bits do not fit pattern period {len(pattern)}")
    return np.tile(np.asarray(pattern, dtype=bool), n_steps // len(pattern))


def puncture(parity_stream, pattern) -> np.ndarray:
    """Keep the parity bits flagged ``True`` in the periodic ``pattern``."""
    stream = np.asarray(parity_stream)
    return stream[_parity_mask(stream.size, pattern)]


def depuncture(llrs, pattern, n_parity: int | None = None) -> np.ndarray:
    """Reinsert erasures (LLR 0) at the positions removed by :func:`puncture`."""
    llrs = np.asarray(llrs, dtype=float)
    period = len(pattern)
    kept = sum(bool(p) for p in pattern)
    if n_parity is None:
        if llrs.size % kept:
            raise ValueError(f"{llrs.size} LLRs do not fit pattern {tuple(pattern)}")
        n_parity = llrs.size // kept * period
    mask = _parity_mask(n_parity, pattern)
    if mask.sum() != llrs.size:
        raise ValueError(f"expected {mask.sum()} punctured LLRs, got {llrs.size}")
    out = np.zeros(n_parity)
    out[mask] = llrs
    return out


def _puncture_mother(mother: np.ndarray, pattern) -> np.ndarray:
    if all(pattern):
        return mother
    pairs = mother.reshape(-1, 2)
    keep = np.ones_like(pairs, dtype=bool)
    keep[:, 1] = _parity_mask(pairs.shape[0], pattern)
    return pairs[keep]


def _depuncture_mother(llrs: np.ndarray, pattern, n_steps: int) -> np.ndarray:
    out = np.zeros((n_steps, 2))
    keep = np.ones((n_steps, 2), dtype=bool)
    keep[:, 1] = _parity_mask(n_steps, pattern)
    if keep.sum() != llrs.size:
        raise ValueError(f"expected {keep.sum()} coded LLRs for {n_steps} steps, got {llrs.size}")
    out[keep] = llrs
    return out


@numba.njit(cache=True)
def _max_log_bcjr(llr, next_state, parity, terminated):
    """llr: (T, 2) channel LLRs for (sys, par); returns APP LLRs (T, 2)."""
    n_steps = llr.shape[0]
    n_states = next_state.shape[0]
    neg = -1e30
    alpha = np.full((n_steps + 1, n_states), neg)
    alpha[0, 0] = 0.0
    for t in range(n_steps):
        ls = 0.5 * llr[t, 0]
        lp = 0.5 * llr[t, 1]
        a_next = alpha[t + 1]
        for s in range(n_states):
            a = alpha[t, s]
            if a <= neg:
                continue
            for u in range(2):
                g = (ls if u == 0 else -ls) + (lp if parity[s, u] == 0 else -lp)
                v = a + g
                ns = next_state[s, u]
                if v > a_next[ns]:
                    a_next[ns] = v
        # renormalise
        m = a_next.max()
        for s in range(n_states):
            a_next[s] -= m
    beta = np.zeros(n_states)
    if terminated:
        beta[:] = neg
        beta[0] = 0.0
    app = np.empty((n_steps, 2))
    new_beta = np.empty(n_states)
    for t in range(n_steps - 1, -1, -1):
        ls = 0.5 * llr[t, 0]
        lp = 0.5 * llr[t, 1]
        best_s0 = neg
        best_s1 = neg
        best_p0 = neg
        best_p1 = neg
        for s in range(n_states):
            new_beta[s] = neg
        for s in range(n_states):
            a = alpha[t, s]
            for u in range(2):
                p = parity[s, u]
                g = (ls if u == 0 else -ls) + (lp if p == 0 else -lp)
                b = beta[next_state[s, u]]
                v = g + b
                if v > new_beta[s]:
                    new_beta[s] = v
                tot = a + v
                if u == 0:
                    if tot > best_s0:
                        best_s0 = tot
                else:
                    if tot > best_s1:
                        best_s1 = tot
                if p == 0:
                    if tot > best_p0:
                        best_p0 = tot
                else:
                    if tot > best_p1:
                        best_p1 = tot
        app[t, 0] = best_s0 - best_s1
        app[t, 1] = best_p0 - best_p1
        m = new_beta.max()
        for s in range(n_states):
            beta[s] = new_beta[s] - m
    return app


def decode_siso(llrs, cfg: CodeConfig = CodeConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Max-log BCJR soft-in/soft-out decoding of punctured code LLRs.

    Parameters
    ----------
    llrs : array_like
        Channel LLRs in the punctured coded-bit order produced by :func:`encode`.
    cfg : CodeConfig

    Returns
    -------
    extrinsic : ndarray
        Extrinsic LLRs on the (punctured) coded bits, clamped to ``±LLR_CLAMP``.
    info_bits : ndarray of int8
        Hard information-bit decisions; a zero APP LLR decides 0.
    """
    llrs = np.clip(np.asarray(llrs, dtype=float).ravel(), -LLR_CLAMP, LLR_CLAMP)
    n_steps = int(llrs.size * cfg.rate)
    if Fraction(llrs.size) * cfg.rate != n_steps:
        raise ValueError(f"{llrs.size} LLRs do not fit rate {cfg.rate}")
    tr = cfg.trellis
    mother = _depuncture_mother(llrs, cfg.puncture_pattern, n_steps)
    app = _max_log_bcjr(mother, tr.next_state, tr.parity, cfg.termination == "zero-tail")
    ext = np.clip(app - mother, -LLR_CLAMP, LLR_CLAMP)
    n_info = n_steps - cfg.tail_length
    info = (app[:n_info, 0] < 0).astype(np.int8)
    keep = np.ones((n_steps, 2), dtype=bool)
    keep[:, 1] = _parity_mask(n_steps, cfg.puncture_pattern)
    return ext[keep], info
