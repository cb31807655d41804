"""Joint max-log detection of desired and interfering symbols, and the IASD loop.

A :class:`DetectorModel` is ``y = sum_b H_b x_b + n`` with white unit-variance
noise.  Block 0 is the desired signal; every further block is an
interfering signal.  All arrays carry a leading symbol-slot axis ``T`` so a
whole packet is detected at once; channels may be shared by all slots
(``(N_r, C)``) or given per slot (``(T, N_r, C)``).
"""

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np
from numba import njit

from .exceptions import HypothesisCapExceeded, ShapeMismatch
from .modem import Constellation
from .validation import check_complex, check_llrs, check_same_shape

HYPOTHESIS_CAP = 2 ** 20
_CHUNK_ELEMS = 2 ** 22  # distance entries per chunk when not cached
_CACHE_ELEMS = 2 ** 24  # largest distance table kept in memory


@dataclass
class LlrFrame:
    """Per-bit LLRs of shape ``(..., N_s, N_m)`` with their provenance."""

    values: np.ndarray
    signal: str = "D"
    stage: str = "a-posteriori"
    location: int = 1

    def __post_init__(self):
        self.values = check_llrs(self.values)


def extrinsic(post, prior):
    """Extrinsic frame: a-posteriori minus a-priori, elementwise."""
    check_same_shape(post.values, prior.values, "posterior and prior frames")
    return LlrFrame(post.values - prior.values, post.signal, "extrinsic", post.location)


@dataclass
class Block:
    H: np.ndarray
    constellation: Constellation
    prior: Optional[np.ndarray] = None


@dataclass
class DetectorModel:
    """Received vectors and an ordered list of column blocks."""

    y: np.ndarray
    blocks: list
    cap: int = HYPOTHESIS_CAP
    _batched: bool = field(init=False, repr=False)

    def __post_init__(self):
        y = check_complex(self.y, "y", ndim=(1, 2))
        self._batched = y.ndim == 2
        self.y = y if self._batched else y[None, :]
        T, n_r = self.y.shape
        blocks = []
        for b in self.blocks:
            H = check_complex(b.H, "H", ndim=(2, 3))
            if H.shape[-2] != n_r or (H.ndim == 3 and H.shape[0] != T):
                raise ShapeMismatch(f"block channel {H.shape} does not fit y {self.y.shape}")
            H = np.broadcast_to(H, (T,) + H.shape[-2:])
            nm = b.constellation.bits_per_symbol
            shape = (T, H.shape[-1], nm)
            if b.prior is None:
                prior = np.zeros(shape)
            else:
                prior = check_llrs(b.prior, "prior", allow_inf=False)
                prior = np.broadcast_to(prior.reshape((-1,) + shape[1:]), shape).copy()
            blocks.append(Block(H, b.constellation, prior))
        if not blocks:
            raise ShapeMismatch("a detector model needs at least one block")
        self.blocks = blocks

    @property
    def n_slots(self):
        return self.y.shape[0]

    @property
    def stream_orders(self):
        return tuple(b.constellation.order for b in self.blocks for _ in range(b.H.shape[-1]))

    @property
    def n_hypotheses(self):
        return int(np.prod(self.stream_orders, dtype=np.float64))

    def with_priors(self, priors):
        """Copy sharing the channels, with the per-block priors replaced."""
        if self.n_hypotheses <= self.cap and self.n_slots * self.n_hypotheses <= _CACHE_ELEMS:
            self._cached_distances  # computed once, shared by every copy
        new = object.__new__(DetectorModel)
        new.__dict__.update(self.__dict__)
        new.blocks = [replace(b, prior=np.asarray(p, dtype=float))
                      for b, p in zip(self.blocks, priors)]
        return new

    def unbatch(self, values):
        return values if self._batched else values[0]

    @cached_property
    def _hypotheses(self):
        """Symbol index of every stream in every hypothesis, shape (S, n_hyp)."""
        orders = self.stream_orders
        return np.indices(orders).reshape(len(orders), -1)

    @cached_property
    def _prior_columns(self):
        """Column of each (hypothesis, stream) a-priori term, see _symbol_priors."""
        width = max(self.stream_orders)
        offsets = width * np.arange(len(self.stream_orders))
        return np.ascontiguousarray(self._hypotheses.T + offsets)

    def _target_columns(self, first, C, M):
        return np.ascontiguousarray(self._hypotheses[first:first + C].T + M * np.arange(C))

    @cached_property
    def _points(self):
        points = [b.constellation.points for b in self.blocks for _ in range(b.H.shape[-1])]
        return np.stack([p[i] for p, i in zip(points, self._hypotheses)])

    @cached_property
    def _hcat(self):
        return np.ascontiguousarray(np.concatenate([b.H for b in self.blocks], axis=-1))

    def distances(self, lo=0, hi=None):
        """Euclidean metric ``-||y - sum H x||^2`` for slots lo..hi, all hypotheses."""
        if self.n_hypotheses > self.cap:
            raise HypothesisCapExceeded(self.n_hypotheses, self.cap)
        hi = self.n_slots if hi is None else hi
        if self.n_slots * self.n_hypotheses <= _CACHE_ELEMS:
            return self._cached_distances[lo:hi]
        return _distance_table(self.y[lo:hi], self._hcat[lo:hi], self._points)

    @cached_property
    def _cached_distances(self):
        return _distance_table(self.y, self._hcat, self._points)

    def slot_chunks(self):
        if self.n_slots * self.n_hypotheses <= _CACHE_ELEMS:
            return [(0, self.n_slots)]
        step = max(1, _CHUNK_ELEMS // self.n_hypotheses)
        return [(lo, min(lo + step, self.n_slots)) for lo in range(0, self.n_slots, step)]


@njit(cache=True)
def _distance_table(y, H, X):
    T, R = y.shape
    S, n_hyp = X.shape
    out = np.empty((T, n_hyp))
    for t in range(T):
        for h in range(n_hyp):
            acc = 0.0
            for r in range(R):
                z = y[t, r]
                for s in range(S):
                    z -= H[t, r, s] * X[s, h]
                acc += z.real * z.real + z.imag * z.imag
            out[t, h] = -acc
    return out


@njit(cache=True)
def _symbol_maxima(dist, cols, tcols, prior, n_out):
    """Best hypothesis metric per (slot, target stream, target symbol).

    ``cols[h, s]`` is the column of `prior` holding the a-priori term of
    stream s in hypothesis h, and ``tcols[h, c]`` the output column of
    target stream c.  The branch-free max keeps random metrics fast.
    """
    T, n_hyp = dist.shape
    S = cols.shape[1]
    C = tcols.shape[1]
    out = np.full((T, n_out), -np.inf)
    for t in range(T):
        pr = prior[t]
        row = dist[t]
        for h in range(n_hyp):
            m = row[h]
            for s in range(S):
                m += pr[cols[h, s]]
            for c in range(C):
                k = tcols[h, c]
                out[t, k] = max(out[t, k], m)
    return out


def _symbol_priors(model, lo, hi):
    """A-priori term 0.5 * b^T L^(a) of every symbol of every stream.

    Stream s, symbol k sits in column ``s * max_order + k``.
    """
    orders = model.stream_orders
    width = max(orders)
    out = np.zeros((hi - lo, len(orders), width))
    s = 0
    for b in model.blocks:
        C, M = b.H.shape[-1], b.constellation.order
        out[:, s:s + C, :M] = 0.5 * b.prior[lo:hi] @ b.constellation.labels.T.astype(float)
        s += C
    return out.reshape(hi - lo, len(orders) * width)


def joint_maxlog_llrs(model, target=0):
    """Max-log a-posteriori LLRs of every bit in block `target`.

    Returns an :class:`LlrFrame` of shape ``(T, C, N_m)`` (or ``(C, N_m)``
    for an unbatched model).
    """
    if model.n_hypotheses > model.cap:
        raise HypothesisCapExceeded(model.n_hypotheses, model.cap)
    first = sum(b.H.shape[-1] for b in model.blocks[:target])
    blk = model.blocks[target]
    C = blk.H.shape[-1]
    labels = blk.constellation.labels
    M = blk.constellation.order
    tcols = model._target_columns(first, C, M)
    out = np.empty((model.n_slots, C, labels.shape[1]))
    for lo, hi in model.slot_chunks():
        best = _symbol_maxima(model.distances(lo, hi), model._prior_columns, tcols,
                              _symbol_priors(model, lo, hi), C * M).reshape(hi - lo, C, M)
        for m in range(labels.shape[1]):
            pos = labels[:, m] == 1
            out[lo:hi, :, m] = best[:, :, pos].max(axis=2) - best[:, :, ~pos].max(axis=2)
    signal = "D" if target == 0 else "I"
    return LlrFrame(model.unbatch(out), signal, "a-posteriori", 1)


class IasdResult(NamedTuple):
    hard_bits: list            # per block: decoded info bits, or None if not decoded
    decoder_posteriors: list   # per block: L^(A,2) on the bit grid, or None
    desired_extrinsic: np.ndarray  # last detector extrinsic of the desired signal
    iterations: int


def iasd_decode(model, codecs, iters=4, order="desired_first", turbo_iters=8,
                desired_offset=None, stop=None):
    """Interference-aware successive decoding of every block of `model`.

    Each outer iteration detects and decodes the signals in `order`; the
    decoder extrinsic of each signal becomes its detector a-priori.  Blocks
    whose codec is ``None`` are detected over but never decoded.

    `desired_offset` is added to the desired detector extrinsic before it
    reaches the decoder (bit-level combining).  `stop`, called with the
    desired hard bits after every desired decode, ends the loop early when
    it returns True.  With ``iters=0`` every signal is detected once with
    the model's priors and decoded without feedback.
    """
    if len(codecs) != len(model.blocks):
        raise ShapeMismatch("one codec (or None) is required per block")
    n_blocks = len(model.blocks)
    if order == "desired_first":
        sequence = list(range(n_blocks))
    elif order == "interference_first":
        sequence = list(range(1, n_blocks)) + [0]
    else:
        raise ValueError(f"unknown detection order {order!r}")
    sequence = [b for b in sequence if codecs[b] is not None]
    priors = [b.prior.copy() for b in model.blocks]
    hard = [None] * n_blocks
    posts = [None] * n_blocks
    ext_d = None
    offset = 0.0 if desired_offset is None else np.asarray(desired_offset, dtype=float)

    def detect(b, current):
        post = joint_maxlog_llrs(model.with_priors(current), b).values
        return np.reshape(post, priors[b].shape) - current[b]

    def decode(b, ext):
        nonlocal ext_d
        dec_in = ext + offset if b == 0 else ext
        if b == 0:
            ext_d = ext
        hard[b], posts[b] = codecs[b].decode(dec_in, turbo_iters)
        priors[b] = posts[b] - dec_in
        return b == 0 and stop is not None and stop(hard[b])

    if iters == 0:
        initial = [p.copy() for p in priors]
        exts = {b: detect(b, initial) for b in sequence}
        for b in sequence:
            decode(b, exts[b])
        return IasdResult(hard, posts, ext_d, 0)

    done = 0
    for it in range(iters):
        done = it + 1
        finished = False
        for b in sequence:
            if decode(b, detect(b, priors)):
                finished = True
                break
        if finished:
            break
    return IasdResult(hard, posts, ext_d, done)
