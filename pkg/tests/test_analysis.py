import csv
import io
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iasd_harq.analysis import (FIG2_PROFILES, GAP_HEADER, MixtureSpec, approx_llr,
                                draw_instance, llr_gap_sweep, mixture_llr, residual_pdf,
                                symbol_vectors, vector_weights)
from iasd_harq.channel import LinkConfig, TransmissionRecord
from iasd_harq.harness import rows_to_csv
from iasd_harq.modem import Constellation, qam

from oracles import crand

Q4 = qam(4)


def _rec(rng, scale_i=1.5):
    return TransmissionRecord(1, crand(rng, 2) * 2, crand(rng, 2, 2) * 1.5,
                              crand(rng, 2, 2) * scale_i)


def _weights(rng, concentrate=None):
    w = rng.dirichlet(np.ones(16)) if concentrate is None else np.eye(16)[concentrate]
    S, _ = symbol_vectors(Q4, 2)
    return w, w @ S


def test_symbol_vector_enumeration_is_c_order():
    S, idx = symbol_vectors(Q4, 2)
    assert S.shape == (16, 2)
    assert tuple(idx[6]) == np.unravel_index(6, (4, 4))
    w = vector_weights([[0.1, 0.2, 0.3, 0.4], [0.4, 0.3, 0.2, 0.1]])
    assert abs(w[6] - 0.2 * 0.2) < 1e-15 and abs(w.sum() - 1) < 1e-12


def test_spec_rejects_bad_weights():
    with pytest.raises(ValueError):
        MixtureSpec(np.full(16, 0.1), np.zeros((16, 2)), np.eye(2))


def test_pdf_perfect_decode_at_origin():
    rng = np.random.default_rng(0)
    spec = MixtureSpec.from_weights(np.eye(16)[5], crand(rng, 2, 2), Q4)
    assert abs(residual_pdf(np.zeros(2), spec) - 1 / np.pi ** 2) < 1e-12


def test_pdf_collapses_to_noise_without_interference():
    spec = MixtureSpec.from_weights(np.full(16, 1 / 16), np.zeros((2, 2)), Q4)
    v = np.array([0.3 + 0.2j, -1.0 + 0.5j])
    assert abs(residual_pdf(v, spec) - np.exp(-np.sum(np.abs(v) ** 2)) / np.pi ** 2) < 1e-15


def test_pdf_integrates_to_one():
    rng = np.random.default_rng(1)
    spec = MixtureSpec.from_weights(rng.dirichlet(np.ones(16)), crand(rng, 2, 2), Q4)
    # importance sampling from a wide complex Gaussian
    n, s2 = 1_000_000, 9.0
    v = crand(rng, n, 2) * np.sqrt(s2)
    proposal = np.exp(-np.sum(np.abs(v) ** 2, axis=-1) / s2) / (np.pi * s2) ** 2
    est = np.mean(residual_pdf(v, spec) / proposal)
    assert abs(est - 1) < 0.01


def _enumerated_mixture_llr(rec, w, x_bar, stream, bit):
    num, den = [], []
    for kd in itertools.product(range(4), repeat=2):
        x_d = Q4.points[list(kd)]
        for k, ki in enumerate(itertools.product(range(4), repeat=2)):
            s = Q4.points[list(ki)]
            d = rec.y - rec.H_I @ x_bar - rec.H_D @ x_d - rec.H_I @ (s - x_bar)
            term = -np.sum(np.abs(d) ** 2) + np.log(w[k])
            (num if Q4.labels[kd[stream], bit] == 1 else den).append(term)
    return np.logaddexp.reduce(num) - np.logaddexp.reduce(den)


def test_mixture_llr_uniform_matches_enumeration():
    rng = np.random.default_rng(2)
    rec = _rec(rng)
    w = np.full(16, 1 / 16)
    x_bar = np.zeros(2)
    for stream, bit in itertools.product(range(2), range(2)):
        got = mixture_llr(rec, w, x_bar, Q4, Q4, stream, bit)
        assert abs(got - _enumerated_mixture_llr(rec, w, x_bar, stream, bit)) < 1e-10


def _cancelled_point_to_point(rec, x_i, stream, bit):
    num, den = [], []
    for kd in itertools.product(range(4), repeat=2):
        d = rec.y - rec.H_I @ x_i - rec.H_D @ Q4.points[list(kd)]
        (num if Q4.labels[kd[stream], bit] == 1 else den).append(-np.sum(np.abs(d) ** 2))
    return np.logaddexp.reduce(num) - np.logaddexp.reduce(den)


def test_one_hot_weights_give_cancelled_llr_for_both_variants():
    rng = np.random.default_rng(3)
    rec = _rec(rng)
    w, x_bar = _weights(rng, concentrate=9)
    ref = _cancelled_point_to_point(rec, x_bar, 0, 1)
    assert abs(mixture_llr(rec, w, x_bar, Q4, Q4, 0, 1) - ref) < 1e-10
    assert abs(approx_llr(rec, w, x_bar, Q4, Q4, 0, 1) - ref) < 1e-9


def test_no_interference_makes_variants_agree():
    rng = np.random.default_rng(4)
    rec = _rec(rng, scale_i=0.0)
    w, x_bar = _weights(rng)
    assert abs(mixture_llr(rec, w, x_bar, Q4, Q4) - approx_llr(rec, w, x_bar, Q4, Q4)) < 1e-10


def test_uniform_weights_differ():
    rng = np.random.default_rng(5)
    rec = _rec(rng)
    w, x_bar = np.full(16, 1 / 16), np.zeros(2)
    assert abs(mixture_llr(rec, w, x_bar, Q4, Q4) - approx_llr(rec, w, x_bar, Q4, Q4)) > 1e-3


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 100.0))
def test_weight_rescaling_leaves_llr(seed, factor):
    rng = np.random.default_rng(seed)
    rec = _rec(rng)
    w, x_bar = _weights(rng)
    scaled = (w * factor) / np.sum(w * factor)
    a = mixture_llr(rec, w, x_bar, Q4, Q4)
    b = mixture_llr(rec, scaled, x_bar, Q4, Q4)
    assert abs(a - b) < 1e-9 * max(1.0, abs(a))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 1), st.integers(0, 1))
def test_flipping_label_negates_llrs(seed, stream, bit):
    rng = np.random.default_rng(seed)
    rec = _rec(rng)
    w, x_bar = _weights(rng)
    labels = Q4.labels.copy()
    labels[:, bit] *= -1
    flipped = Constellation(4, Q4.points, labels)
    for fn in (mixture_llr, approx_llr):
        a = fn(rec, w, x_bar, Q4, Q4, stream, bit)
        b = fn(rec, w, x_bar, flipped, Q4, stream, bit)
        assert abs(a + b) < 1e-9 * max(1.0, abs(a))


def test_sweep_rows_and_csv():
    rows = llr_gap_sweep(LinkConfig(), {"uniform": FIG2_PROFILES["uniform"],
                                        "onehot": (0.0, 0.0, 0.0, 1.0)},
                         np.random.default_rng(0), snr_grid=(10.0,), instances=50)
    assert [r[0] for r in rows] == ["uniform", "onehot"]
    assert rows[1][4] < 1e-9
    text = rows_to_csv(rows, GAP_HEADER)
    parsed = list(csv.reader(io.StringIO(text)))
    assert parsed[0][:4] == ["profile", "snr_db", "mean_abs_llr_mixture", "mean_abs_llr_approx"]
    assert len(parsed) == 3 and "\r" not in text


def test_instance_draw_respects_profile():
    rng = np.random.default_rng(1)
    rec, w, x_bar = draw_instance(LinkConfig(), FIG2_PROFILES["p0.95"], rng)
    assert abs(w.sum() - 1) < 1e-12 and abs(w.max() - 0.95 ** 2) < 1e-12
    assert rec.y.shape == (2,)
