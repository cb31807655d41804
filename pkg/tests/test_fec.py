import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iasd_harq.exceptions import ConfigError, LengthMismatch
from iasd_harq.fec import PacketCodec, TurboCode, decode, encode, rate_fraction

RATES = [0.33, 0.5, 0.83]


def _bits(rng, n):
    return (1 - 2 * rng.integers(0, 2, n)).astype(np.int8)


@pytest.fixture(scope="module")
def codes():
    return {r: TurboCode.create(400, r, seed=3) for r in RATES}


def test_coded_lengths(codes):
    assert codes[0.33].coded_length == 1200
    assert codes[0.5].coded_length == 800
    assert codes[0.83].coded_length == 480


def test_unsupported_rate():
    with pytest.raises(ConfigError):
        rate_fraction(0.3)


def test_interleaver_is_permutation(codes):
    for c in codes.values():
        assert np.array_equal(np.sort(c.interleaver), np.arange(c.K))


def test_puncturing_keeps_systematic_and_tail(codes):
    for c in codes.values():
        assert np.array_equal(c.keep[:c.K], np.arange(c.K))
        assert np.array_equal(c.keep[-8:], np.arange(3 * c.K, 3 * c.K + 8))
        assert len(np.unique(c.keep)) == c.coded_length


def test_all_plus_input_gives_all_plus_codeword(codes):
    for c in codes.values():
        assert np.all(encode(np.ones(c.K, dtype=np.int8), c) == 1)


def test_encode_length_checked(codes):
    with pytest.raises(LengthMismatch):
        encode(np.ones(10), codes[0.5])
    with pytest.raises(LengthMismatch):
        decode(np.zeros(10), codes[0.5])


def test_encoder_is_linear(codes):
    rng = np.random.default_rng(1)
    c = codes[0.5]
    for _ in range(50):
        a, b = _bits(rng, c.K), _bits(rng, c.K)
        np.testing.assert_array_equal(encode(a * b, c), encode(a, c) * encode(b, c))


@pytest.mark.parametrize("rate", RATES)
def test_noiseless_round_trip(codes, rate):
    rng = np.random.default_rng(2)
    c = codes[rate]
    for _ in range(20):
        m = _bits(rng, c.K)
        res = decode(10.0 * encode(m, c), c)
        np.testing.assert_array_equal(res.hard_bits, m)


def test_zero_input_gives_zero_posterior(codes):
    res = decode(np.zeros(1200), codes[0.33])
    assert np.all(res.posterior == 0) and np.all(res.coded_posterior == 0)


def test_posterior_decomposition(codes):
    c = codes[0.33]
    rng = np.random.default_rng(5)
    m = _bits(rng, c.K)
    y = 2 * (encode(m, c) + rng.normal(0, 1.0, c.coded_length))
    la = rng.normal(0, 1, c.K)
    res = decode(y, c, a_priori=la)
    np.testing.assert_allclose(res.posterior, y[:c.K] + la + res.extrinsic, atol=1e-9)


def test_depuncture_restores_known_positions(codes):
    c = codes[0.83]
    x = np.arange(c.mother_length, dtype=float) + 1
    back = c.depuncture(c.puncture(x))
    np.testing.assert_array_equal(back[c.keep], x[c.keep])
    erased = np.setdiff1d(np.arange(c.mother_length), c.keep)
    assert np.all(back[erased] == 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.1, 50.0))
def test_hard_decisions_scale_invariant(seed, scale):
    c = TurboCode.create(64, 0.5, seed=1)
    m = _bits(np.random.default_rng(seed), c.K)
    x = encode(m, c).astype(float)
    np.testing.assert_array_equal(decode(x, c).hard_bits, decode(scale * x, c).hard_bits)


def test_awgn_regression_baseline(codes):
    # BPSK over AWGN at Eb/N0 = 4 dB
    c = codes[0.33]
    rng = np.random.default_rng(11)
    ebn0 = 10 ** 0.4
    sigma2 = 1.0 / (2 * float(c.K / c.coded_length) * ebn0)
    errors = 0
    for _ in range(200):
        m = _bits(rng, c.K)
        y = encode(m, c) + rng.normal(0, np.sqrt(sigma2), c.coded_length)
        errors += int(np.sum(decode(2 * y / sigma2, c, iters=8).hard_bits != m))
    assert errors / (200 * c.K) < 1e-3


def test_packet_codec_shapes_and_round_trip():
    codec = PacketCodec.create(400, 2, 0.33, 2, 2, seed=0)
    assert codec.n_symbols == 300 and codec.info_bits == 400
    rng = np.random.default_rng(0)
    info = _bits(rng, 400)
    grid = codec.encode(info)
    assert grid.shape == (300, 2, 2)
    hard, post = codec.decode(8.0 * grid)
    np.testing.assert_array_equal(hard, info)
    assert post.shape == grid.shape and np.all(np.sign(post) == grid)


def test_interference_codec_fills_same_slots():
    for rate in RATES:
        codec = PacketCodec.for_symbols(300, 2, rate, 2, 4)
        assert codec.n_symbols == 300
        assert codec.codes[0].coded_length == 1200
        assert codec.codes[0].K == int(np.floor(1200 * float(rate_fraction(rate))))
