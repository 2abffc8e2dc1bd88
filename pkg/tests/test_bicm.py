from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uwotfs.bicm import (
    CodeConfig,
    ConstellationConfig,
    decode_siso,
    deinterleave,
    demap_llr,
    depuncture,
    encode,
    interleave,
    map_symbols,
    permutation,
    puncture,
    soft_symbols,
)

HALF = CodeConfig(rate=Fraction(1, 2))
THREE_Q = CodeConfig(rate=Fraction(3, 4))


def _shift_register_rsc(bits, fb_octal="133", ff_octal="171"):
    """Hand-stepped RSC encoder used as an oracle (no shared code with the package)."""
    fb = [int(b) for b in format(int(fb_octal, 8), "07b")]
    ff = [int(b) for b in format(int(ff_octal, 8), "07b")]
    reg = [0] * 6  # a_{t-1} .. a_{t-6}
    out = []
    for u in bits:
        a = (u + sum(f * r for f, r in zip(fb[1:], reg))) % 2
        p = (ff[0] * a + sum(f * r for f, r in zip(ff[1:], reg))) % 2
        out += [u, p]
        reg = [a] + reg[:-1]
    return out


# --- encoder -----------------------------------------------------------------

def test_all_zero_input_gives_all_zero_output():
    assert not encode(np.zeros(30, int), HALF).any()


def test_impulse_response_matches_shift_register():
    impulse = [1] + [0] * 9
    cfg = CodeConfig(termination="truncated")
    assert encode(impulse, cfg).tolist() == _shift_register_rsc(impulse)
    # systematic stream is the impulse itself; parity is the RSC response
    assert encode(impulse, cfg)[1::2].tolist() == [1, 1, 0, 1, 1, 0, 1, 0, 0, 1]


@given(st.lists(st.integers(0, 1), min_size=1, max_size=60))
def test_encoder_matches_oracle_on_random_input(bits):
    cfg = CodeConfig(termination="truncated")
    assert encode(bits, cfg).tolist() == _shift_register_rsc(bits)


def test_zero_tail_returns_register_to_zero():
    rng = np.random.default_rng(3)
    bits = rng.integers(0, 2, 40)
    coded = encode(bits, HALF)
    tail = coded[2 * 40 :: 2]
    # feeding the full systematic stream (data + tail) through the oracle ends in state 0
    full = bits.tolist() + tail.tolist()
    assert _shift_register_rsc(full) == coded.tolist()
    assert len(tail) == 6


@pytest.mark.parametrize("n_info", [6, 60, 858])
def test_rate_three_quarter_length(n_info):
    coded = encode(np.ones(n_info, int), THREE_Q)
    assert coded.size == Fraction(4, 3) * (n_info + THREE_Q.tail_length)


def test_rate_three_quarter_keeps_systematic_bits():
    rng = np.random.default_rng(0)
    bits = rng.integers(0, 2, 57)
    mother = encode(bits, HALF).reshape(-1, 2)
    punct = encode(bits, THREE_Q).reshape(-1, 4)  # per period: s0 p0 s1 s2
    assert np.array_equal(punct[:, [0, 2, 3]].ravel(), mother[:, 0])
    assert np.array_equal(punct[:, 1], mother[::3, 1])


def test_puncture_pattern_removes_two_thirds_of_parity():
    cfg = THREE_Q
    assert sum(cfg.puncture_pattern) / len(cfg.puncture_pattern) == pytest.approx(1 / 3)


def test_encode_rejects_period_mismatch():
    with pytest.raises(ValueError):
        encode(np.zeros(5, int), THREE_Q)  # 5 + 6 steps is not a multiple of 3


def test_info_length_inverts_coded_length():
    for cfg in (HALF, THREE_Q):
        for n_coded in (576, 1152, 1728):
            assert cfg.coded_length(cfg.info_length(n_coded)) == n_coded


# --- puncture / depuncture ------------------------------------------------------

def test_puncture_examples():
    pattern = (True, False, False)
    assert puncture([1, 0, 1, 1, 1, 0], pattern).tolist() == [1, 1]
    assert depuncture([2.0, -3.0], pattern).tolist() == [2.0, 0, 0, -3.0, 0, 0]


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=20))
def test_puncture_depuncture_round_trip(values):
    pattern = (True, False, False)
    assert puncture(depuncture(values, pattern), pattern).tolist() == list(values)


def test_puncture_length_mismatch():
    with pytest.raises(ValueError):
        puncture(np.zeros(7), (True, False, False))
    with pytest.raises(ValueError):
        depuncture(np.zeros(3), (True, False, False), n_parity=6)


# --- interleaver -----------------------------------------------------------------

def test_permutation_is_bijection():
    perm = permutation(1152, 7)
    assert np.array_equal(np.sort(perm), np.arange(1152))


@given(st.integers(1, 300), st.integers(0, 2**31))
@settings(max_examples=30)
def test_interleaver_round_trip(n, seed):
    x = np.random.default_rng(seed).integers(0, 2, n)
    assert np.array_equal(deinterleave(interleave(x, seed), seed), x)


def test_seeds_give_different_permutations():
    for n in (16, 64, 1152):
        assert not np.array_equal(permutation(n, 0), permutation(n, 1))


# --- mapping ---------------------------------------------------------------------

def test_qpsk_zero_bits():
    assert map_symbols([0, 0], ConstellationConfig(4))[0] == pytest.approx((1 + 1j) / np.sqrt(2))


@pytest.mark.parametrize("order", [4, 16, 64])
def test_enumerated_energy_is_one(order):
    pts = ConstellationConfig(order).points
    assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0, abs=1e-14)
    assert len(np.unique(np.round(pts, 12))) == order


@pytest.mark.parametrize("order", [4, 16, 64])
def test_gray_neighbours_differ_in_one_bit(order):
    cfg = ConstellationConfig(order)
    pts, labels = cfg.points, cfg.labels
    dist = np.abs(pts[:, None] - pts[None, :])
    dmin = dist[dist > 0].min()
    for i, j in zip(*np.nonzero(np.isclose(dist, dmin))):
        assert np.sum(labels[i] != labels[j]) == 1


@pytest.mark.parametrize("order", [4, 16, 64])
def test_empirical_energy(order):
    cfg = ConstellationConfig(order)
    bits = np.random.default_rng(order).integers(0, 2, 10**6 * cfg.bits_per_symbol)
    energy = np.mean(np.abs(map_symbols(bits, cfg)) ** 2)
    assert 0.99 <= energy <= 1.01


def test_map_rejects_ragged_bits():
    with pytest.raises(ValueError):
        map_symbols([0, 1, 1], ConstellationConfig(16))


# --- demapping -------------------------------------------------------------------

def test_qpsk_llr_at_constellation_point():
    cfg = ConstellationConfig(4)
    for bits in ([0, 0], [0, 1], [1, 0], [1, 1]):
        s = map_symbols(bits, cfg)
        llr = demap_llr(s, 1.0, cfg)
        # max-log: 2 sqrt(2) |component| / var
        assert np.allclose(np.abs(llr), 2 * np.sqrt(2) * abs(s[0].real))
        assert np.array_equal(llr < 0, np.array(bits, bool))


def test_origin_gives_zero_sign_llrs():
    assert np.allclose(demap_llr([0j], 0.3, ConstellationConfig(4)), 0)
    # for 16/64-QAM only the sign bits are symmetric about the origin
    for order in (16, 64):
        m = ConstellationConfig(order).bits_per_symbol
        llr = demap_llr([0j], 0.3, ConstellationConfig(order))
        assert llr[0] == 0 and llr[m // 2] == 0


def test_qpsk_extrinsic_independent_of_priors():
    cfg = ConstellationConfig(4)
    rng = np.random.default_rng(1)
    z = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    base = demap_llr(z, 0.7, cfg)
    grid = np.linspace(-20, 20, 9)
    for a in grid:
        for b in grid:
            pri = np.tile([a, b], z.size)
            assert np.allclose(demap_llr(z, 0.7, cfg, pri), base, atol=1e-12)


def test_demap_brute_force_max_log_16qam():
    cfg = ConstellationConfig(16)
    rng = np.random.default_rng(2)
    z = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    pri = rng.standard_normal(20) * 3
    out = demap_llr(z, 0.4, cfg, pri).reshape(5, 4)
    for i in range(5):
        p = pri[4 * i : 4 * i + 4]
        for b in range(4):
            best = {0: -np.inf, 1: -np.inf}
            for s, lab in zip(cfg.points, cfg.labels):
                metric = -abs(z[i] - s) ** 2 / 0.4 + sum(
                    0.5 * p[j] * (1 if lab[j] == 0 else -1) for j in range(4) if j != b
                )
                best[lab[b]] = max(best[lab[b]], metric)
            assert out[i, b] == pytest.approx(best[0] - best[1])


def test_demap_rejects_non_positive_variance():
    with pytest.raises(ValueError):
        demap_llr([1 + 1j], 0.0, ConstellationConfig(4))


def test_soft_symbols_limits():
    cfg = ConstellationConfig(16)
    mean, var = soft_symbols(np.zeros(8), cfg)
    assert np.allclose(mean, 0) and np.allclose(var, 1)
    bits = np.array([0, 1, 1, 0, 1, 1, 1, 0])
    mean, var = soft_symbols(50.0 * (1 - 2 * bits), cfg)
    assert np.allclose(mean, map_symbols(bits, cfg), atol=1e-9)
    assert np.all(var < 1e-9)


# --- decoder ---------------------------------------------------------------------

@pytest.mark.parametrize("cfg", [HALF, THREE_Q], ids=["r12", "r34"])
def test_noiseless_round_trip(cfg):
    rng = np.random.default_rng(4)
    for _ in range(20):
        bits = rng.integers(0, 2, 90)
        coded = encode(bits, cfg)
        _, info = decode_siso(10.0 * (1 - 2 * coded.astype(float)), cfg)
        assert np.array_equal(info, bits)


def test_all_zero_llrs_decide_zero():
    _, info = decode_siso(np.zeros(2 * (40 + 6)), HALF)
    assert not info.any()


def test_single_flipped_llr_is_corrected():
    rng = np.random.default_rng(5)
    for _ in range(200):
        bits = rng.integers(0, 2, 60)
        llr = 20.0 * (1 - 2 * encode(bits, HALF).astype(float))
        llr[rng.integers(llr.size)] *= -1
        _, info = decode_siso(llr, HALF)
        assert np.array_equal(info, bits)


def test_extrinsic_excludes_channel_input():
    rng = np.random.default_rng(6)
    bits = rng.integers(0, 2, 30)
    llr = 4.0 * (1 - 2 * encode(bits, HALF).astype(float)) + rng.standard_normal(72)
    ext, _ = decode_siso(llr, HALF)
    bumped = llr.copy()
    bumped[10] += 0.01  # small enough not to change the winning paths
    ext2, _ = decode_siso(bumped, HALF)
    assert ext2[10] == pytest.approx(ext[10], abs=1e-9)


@pytest.mark.parametrize("rate", [Fraction(1, 2), Fraction(3, 4)])
@pytest.mark.parametrize("order", [4, 16, 64])
def test_full_chain_identity(rate, order):
    cfg = CodeConfig(rate=rate)
    const = ConstellationConfig(order)
    rng = np.random.default_rng(order)
    n_coded = 36 * const.bits_per_symbol * 4
    n_info = cfg.info_length(n_coded)
    for trial in range(1000):
        bits = rng.integers(0, 2, n_info)
        d = map_symbols(interleave(encode(bits, cfg), trial), const)
        llr = deinterleave(demap_llr(d, 1e-2, const), trial)
        _, info = decode_siso(llr, cfg)
        assert np.array_equal(info, bits)
