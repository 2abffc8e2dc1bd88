"""Bit-interleaved coded modulation: RSC code, interleaver, QAM."""
from .coding import LLR_CLAMP, CodeConfig, decode_siso, depuncture, encode, puncture
from .interleaver import deinterleave, interleave, permutation
from .qam import ConstellationConfig, demap_llr, map_symbols, soft_symbols

__all__ = [
    "LLR_CLAMP",
    "CodeConfig",
    "ConstellationConfig",
    "decode_siso",
    "deinterleave",
    "demap_llr",
    "depuncture",
    "encode",
    "interleave",
    "map_symbols",
    "permutation",
    "puncture",
    "soft_symbols",
]
