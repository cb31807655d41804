"""Parallel-concatenated turbo code built from two (7, 5) RSC encoders.

Mother code layout (3K + 8 bits)::

    [ systematic (K) | parity 1 (K) | parity 2 (K)
      | tail 1 systematic (2) | tail 1 parity (2)
      | tail 2 systematic (2) | tail 2 parity (2) ]

Rate matching keeps every systematic and tail bit and an evenly spaced
subset of each parity stream, split as equally as possible between the
two constituent encoders.  For ``n_par = n - K - 8`` kept parity bits the
first encoder keeps ``ceil(n_par / 2)`` positions ``floor(j * K / n1)`` and
the second keeps the remaining ``n2`` positions ``floor((j + 1/2) * K / n2)``.
Rate 1/3 therefore drops only 8 parity bits to make room for the tails.

Decoding is max-log BCJR on the 4-state trellis, so every output LLR scales
linearly with the input LLRs.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from numba import njit

from .exceptions import ConfigError, LengthMismatch
from .validation import check_bipolar, check_llrs

RATES = {0.33: Fraction(1, 3), 0.5: Fraction(1, 2), 0.83: Fraction(5, 6)}
TAIL = 2  # trellis memory
_NEG = -1e30

# state = 2 * a[k-1] + a[k-2]; feedback 5 (1 + D^2), feedforward 7 (1 + D + D^2)
_NEXT = np.zeros((4, 2), dtype=np.int64)
_PARITY = np.zeros((4, 2), dtype=np.int64)
for _s in range(4):
    _a1, _a2 = _s >> 1, _s & 1
    for _u in range(2):
        _a = _u ^ _a2
        _NEXT[_s, _u] = 2 * _a + _a1
        _PARITY[_s, _u] = _a ^ _a1 ^ _a2


def rate_fraction(rate):
    """Map a nominal rate (0.33, 0.50, 0.83) to its exact fraction."""
    for nominal, frac in RATES.items():
        if abs(float(rate) - nominal) < 5e-3:
            return frac
    raise ConfigError(f"unsupported code rate {rate}; expected one of {sorted(RATES)}")


@njit(cache=True)
def _rsc_encode(u, nxt, par):
    """Binary RSC encoding with termination; returns (parity, tail_u, tail_p)."""
    K = u.shape[0]
    parity = np.empty(K, dtype=np.int8)
    s = 0
    for t in range(K):
        parity[t] = par[s, u[t]]
        s = nxt[s, u[t]]
    tail_u = np.empty(2, dtype=np.int8)
    tail_p = np.empty(2, dtype=np.int8)
    for t in range(2):
        # drive the feedback bit to zero: u = a[k-2]
        ut = s & 1
        tail_u[t] = ut
        tail_p[t] = par[s, ut]
        s = nxt[s, ut]
    return parity, tail_u, tail_p


@njit(cache=True)
def _siso(lu, lp, nxt, par):
    """Max-log BCJR over a terminated trellis.

    `lu` holds the full systematic input (channel + a-priori) and `lp` the
    parity channel LLRs.  Returns a-posteriori LLRs of the input and parity
    bits at every trellis step.
    """
    n = lu.shape[0]
    alpha = np.full((n + 1, 4), _NEG)
    beta = np.full((n + 1, 4), _NEG)
    alpha[0, 0] = 0.0
    beta[n, 0] = 0.0
    gam = np.empty((n, 4, 2))
    for t in range(n):
        for s in range(4):
            for u in range(2):
                xu = 1.0 - 2.0 * u
                xp = 1.0 - 2.0 * par[s, u]
                gam[t, s, u] = 0.5 * (xu * lu[t] + xp * lp[t])
    for t in range(n):
        for s in range(4):
            a = alpha[t, s]
            if a <= _NEG:
                continue
            for u in range(2):
                ns = nxt[s, u]
                m = a + gam[t, s, u]
                if m > alpha[t + 1, ns]:
                    alpha[t + 1, ns] = m
        mx = alpha[t + 1, 0]
        for s in range(1, 4):
            if alpha[t + 1, s] > mx:
                mx = alpha[t + 1, s]
        for s in range(4):
            if alpha[t + 1, s] > _NEG:
                alpha[t + 1, s] -= mx
    for t in range(n - 1, -1, -1):
        for s in range(4):
            best = _NEG
            for u in range(2):
                b = beta[t + 1, nxt[s, u]]
                if b <= _NEG:
                    continue
                m = gam[t, s, u] + b
                if m > best:
                    best = m
            beta[t, s] = best
        mx = beta[t, 0]
        for s in range(1, 4):
            if beta[t, s] > mx:
                mx = beta[t, s]
        for s in range(4):
            if beta[t, s] > _NEG:
                beta[t, s] -= mx
    app_u = np.empty(n)
    app_p = np.empty(n)
    for t in range(n):
        u0 = _NEG
        u1 = _NEG
        p0 = _NEG
        p1 = _NEG
        for s in range(4):
            a = alpha[t, s]
            if a <= _NEG:
                continue
            for u in range(2):
                b = beta[t + 1, nxt[s, u]]
                if b <= _NEG:
                    continue
                m = a + gam[t, s, u] + b
                if u == 0:
                    if m > u0:
                        u0 = m
                elif m > u1:
                    u1 = m
                if par[s, u] == 0:
                    if m > p0:
                        p0 = m
                elif m > p1:
                    p1 = m
        app_u[t] = u0 - u1
        app_p[t] = p0 - p1
    return app_u, app_p


@njit(cache=True)
def _turbo_decode(mother, la, perm, iters, nxt, par):
    K = la.shape[0]
    lsys = mother[:K] + la
    lp1 = np.empty(K + 2)
    lp2 = np.empty(K + 2)
    lp1[:K] = mother[K:2 * K]
    lp2[:K] = mother[2 * K:3 * K]
    lp1[K:] = mother[3 * K + 2:3 * K + 4]
    lp2[K:] = mother[3 * K + 6:3 * K + 8]
    in1 = np.empty(K + 2)
    in2 = np.empty(K + 2)
    in1[K:] = mother[3 * K:3 * K + 2]
    in2[K:] = mother[3 * K + 4:3 * K + 6]
    le12 = np.zeros(K)
    le21 = np.zeros(K)
    app_u1 = np.zeros(K + 2)
    app_p1 = np.zeros(K + 2)
    app_u2 = np.zeros(K + 2)
    app_p2 = np.zeros(K + 2)
    for _ in range(iters):
        for k in range(K):
            in1[k] = lsys[k] + le21[k]
        app_u1, app_p1 = _siso(in1, lp1, nxt, par)
        for k in range(K):
            le12[k] = app_u1[k] - in1[k]
        for k in range(K):
            in2[k] = lsys[perm[k]] + le12[perm[k]]
        app_u2, app_p2 = _siso(in2, lp2, nxt, par)
        for k in range(K):
            le21[perm[k]] = app_u2[k] - in2[k]
    ext = le12 + le21
    coded = np.empty(3 * K + 8)
    coded[:K] = lsys + ext
    coded[K:2 * K] = app_p1[:K]
    coded[2 * K:3 * K] = app_p2[:K]
    coded[3 * K:3 * K + 2] = app_u1[K:]
    coded[3 * K + 2:3 * K + 4] = app_p1[K:]
    coded[3 * K + 4:3 * K + 6] = app_u2[K:]
    coded[3 * K + 6:3 * K + 8] = app_p2[K:]
    return ext, coded


def _evenly_spaced(count, length, offset):
    if count <= 0:
        return np.zeros(0, dtype=np.int64)
    return np.floor((np.arange(count) + offset) * length / count).astype(np.int64)


@dataclass(frozen=True, eq=False)
class TurboCode:
    """Turbo code with a fixed interleaver and rate-matching pattern."""

    K: int
    rate: Fraction
    coded_length: int
    interleaver: np.ndarray = field(repr=False)
    keep: np.ndarray = field(repr=False)

    @classmethod
    def create(cls, K, rate, seed=0, coded_length=None):
        """Build a code for `K` info bits.

        The coded length defaults to ``round(K / rate)``; pass
        `coded_length` explicitly to rate-match to an arbitrary budget
        between K + 8 and 3K + 8.
        """
        frac = rate_fraction(rate)
        n = int(round(K / frac)) if coded_length is None else int(coded_length)
        if not K + 2 * 2 * TAIL <= n <= 3 * K + 4 * TAIL:
            raise ConfigError(f"coded length {n} infeasible for K={K}")
        perm = np.random.default_rng(seed).permutation(K)
        n_par = n - K - 4 * TAIL
        n1 = (n_par + 1) // 2
        n2 = n_par - n1
        keep = np.concatenate([
            np.arange(K),
            K + _evenly_spaced(n1, K, 0.0),
            2 * K + _evenly_spaced(n2, K, 0.5),
            3 * K + np.arange(4 * TAIL),
        ])
        perm.setflags(write=False)
        keep.setflags(write=False)
        return cls(K, frac, n, perm, keep)

    @property
    def mother_length(self):
        return 3 * self.K + 4 * TAIL

    def puncture(self, mother):
        return np.asarray(mother)[..., self.keep]

    def depuncture(self, llrs):
        """Place transmitted LLRs in mother-code order; erased bits get 0."""
        llrs = np.asarray(llrs, dtype=np.float64)
        out = np.zeros(llrs.shape[:-1] + (self.mother_length,))
        out[..., self.keep] = llrs
        return out


class DecodeResult(NamedTuple):
    posterior: np.ndarray        # info-bit a-posteriori LLRs
    extrinsic: np.ndarray        # info-bit extrinsic LLRs
    hard_bits: np.ndarray        # bipolar decisions
    coded_posterior: np.ndarray  # a-posteriori LLRs of every transmitted bit


def encode(bits, code):
    """Turbo-encode K bipolar bits into `code.coded_length` bipolar bits."""
    bits = check_bipolar(bits)
    if bits.shape != (code.K,):
        raise LengthMismatch(f"expected {code.K} info bits, got {bits.shape}")
    u = ((1 - bits) // 2).astype(np.int64)
    p1, t1u, t1p = _rsc_encode(u, _NEXT, _PARITY)
    p2, t2u, t2p = _rsc_encode(u[code.interleaver], _NEXT, _PARITY)
    mother = np.concatenate([u.astype(np.int8), p1, p2, t1u, t1p, t2u, t2p])
    return (1 - 2 * code.puncture(mother)).astype(np.int8)


def decode(llrs, code, a_priori=None, iters=8):
    """Max-log turbo decoding of one codeword.

    Returns info posteriors, info extrinsics (posterior minus systematic
    channel LLR minus `a_priori`), hard decisions and the a-posteriori LLRs
    of the transmitted coded bits in transmission order.
    """
    llrs = check_llrs(llrs, allow_inf=False)
    if llrs.shape != (code.coded_length,):
        raise LengthMismatch(f"expected {code.coded_length} LLRs, got {llrs.shape}")
    la = np.zeros(code.K) if a_priori is None else check_llrs(a_priori, allow_inf=False)
    if la.shape != (code.K,):
        raise LengthMismatch(f"expected {code.K} a-priori LLRs, got {la.shape}")
    if iters < 1:
        raise ValueError("turbo decoding needs at least one iteration")
    mother = code.depuncture(llrs)
    ext, coded = _turbo_decode(mother, la, code.interleaver.astype(np.int64), int(iters),
                               _NEXT, _PARITY)
    post = coded[:code.K].copy()
    hard = np.where(post >= 0, 1, -1).astype(np.int8)
    return DecodeResult(post, ext, hard, coded[code.keep])


@dataclass(frozen=True, eq=False)
class PacketCodec:
    """Packet of several turbo codewords, bit-interleaved onto a symbol grid.

    The bit grid has shape ``(n_symbols, n_streams, bits_per_symbol)``;
    slot ``t`` of the grid is one vector channel use.
    """

    codes: tuple
    n_streams: int
    bits_per_symbol: int
    channel_interleaver: np.ndarray = field(repr=False)

    @classmethod
    def create(cls, info_bits, codewords, rate, n_streams, bits_per_symbol, seed=0):
        if info_bits % codewords:
            raise ConfigError(f"{info_bits} info bits cannot be split into {codewords} codewords")
        code = TurboCode.create(info_bits // codewords, rate, seed=seed)
        return cls._assemble((code,) * codewords, n_streams, bits_per_symbol, seed)

    @classmethod
    def for_symbols(cls, n_symbols, codewords, rate, n_streams, bits_per_symbol, seed=0):
        """Codec whose coded packet exactly fills `n_symbols` vector slots.

        The info length per codeword is ``floor(n * rate)`` for a per-codeword
        budget of n coded bits.
        """
        total = n_symbols * n_streams * bits_per_symbol
        if total % codewords:
            raise ConfigError(f"{total} coded bits cannot be split into {codewords} codewords")
        n = total // codewords
        K = int(np.floor(n * rate_fraction(rate)))
        code = TurboCode.create(K, rate, seed=seed, coded_length=n)
        return cls._assemble((code,) * codewords, n_streams, bits_per_symbol, seed)

    @classmethod
    def _assemble(cls, codes, n_streams, bits_per_symbol, seed):
        total = sum(c.coded_length for c in codes)
        if total % (n_streams * bits_per_symbol):
            raise ConfigError(
                f"{total} coded bits do not fill whole {n_streams}x{bits_per_symbol}-bit symbol slots")
        perm = np.random.default_rng(seed + 7919).permutation(total)
        perm.setflags(write=False)
        return cls(codes, n_streams, bits_per_symbol, perm)

    @property
    def info_bits(self):
        return sum(c.K for c in self.codes)

    @property
    def coded_bits(self):
        return sum(c.coded_length for c in self.codes)

    @property
    def n_symbols(self):
        return self.coded_bits // (self.n_streams * self.bits_per_symbol)

    def _to_grid(self, coded):
        grid = np.empty_like(coded)
        grid[self.channel_interleaver] = coded
        return grid.reshape(self.n_symbols, self.n_streams, self.bits_per_symbol)

    def _from_grid(self, grid):
        return np.asarray(grid).reshape(-1)[self.channel_interleaver]

    def encode(self, info):
        info = check_bipolar(info)
        if info.shape != (self.info_bits,):
            raise LengthMismatch(f"expected {self.info_bits} info bits, got {info.shape}")
        parts, start = [], 0
        for c in self.codes:
            parts.append(encode(info[start:start + c.K], c))
            start += c.K
        return self._to_grid(np.concatenate(parts))

    def decode(self, llr_grid, iters=8):
        """Decode every codeword; returns (hard info bits, coded posterior grid)."""
        coded = self._from_grid(llr_grid)
        hard, post, start = [], [], 0
        for c in self.codes:
            res = decode(coded[start:start + c.coded_length], c, iters=iters)
            hard.append(res.hard_bits)
            post.append(res.coded_posterior)
            start += c.coded_length
        return np.concatenate(hard), self._to_grid(np.concatenate(post))
