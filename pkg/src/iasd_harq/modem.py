"""Square QAM constellations with Gray labeling and soft symbol statistics.

Bits are bipolar throughout: +1 stands for binary 0 and -1 for binary 1,
and an LLR is ``log P(b=+1) / P(b=-1)``.

Labeling
--------
4-QAM: bit 1 gives the sign of the real part, bit 2 the sign of the
imaginary part, scaled by 1/sqrt(2).

16-QAM: bits 1 and 3 select the real amplitude, bits 2 and 4 the imaginary
amplitude, each through the 2-bit Gray map::

    (+1, +1) -> +3    (+1, -1) -> +1    (-1, -1) -> -1    (-1, +1) -> -3

scaled by 1/sqrt(10). Bits 1 and 2 are therefore the sign bits, as in 4-QAM.
"""

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import LengthMismatch
from .validation import check_bipolar, check_llrs

_GRAY_AXIS = {(1, 1): 3.0, (1, -1): 1.0, (-1, -1): -1.0, (-1, 1): -3.0}


@dataclass(frozen=True, eq=False)
class Constellation:
    """A unit-power square QAM constellation.

    ``points[k]`` carries the bipolar label ``labels[k]``; point 0 is the
    all-(+1) label.
    """

    order: int
    points: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)

    @property
    def bits_per_symbol(self):
        return self.labels.shape[1]

    def __eq__(self, other):
        return isinstance(other, Constellation) and self.order == other.order

    def __hash__(self):
        return hash(self.order)


def _point_for(label):
    if len(label) == 2:
        return complex(label[0], label[1]) / np.sqrt(2.0)
    re = _GRAY_AXIS[(label[0], label[2])]
    im = _GRAY_AXIS[(label[1], label[3])]
    return complex(re, im) / np.sqrt(10.0)


_CACHE = {}


def qam(order):
    """Return the 4- or 16-QAM constellation."""
    if order not in (4, 16):
        raise ValueError(f"unsupported QAM order {order}; use 4 or 16")
    if order not in _CACHE:
        nbits = int(np.log2(order))
        labels = np.array(list(itertools.product((1, -1), repeat=nbits)), dtype=np.int8)
        points = np.array([_point_for(tuple(lab)) for lab in labels])
        labels.setflags(write=False)
        points.setflags(write=False)
        _CACHE[order] = Constellation(order, points, labels)
    return _CACHE[order]


def bits_to_indices(bits, c):
    """Map bipolar bits (..., N_m) to constellation indices (...)."""
    nm = c.bits_per_symbol
    binary = (1 - np.asarray(bits, dtype=np.int64)) // 2
    weights = 1 << np.arange(nm - 1, -1, -1)
    return binary @ weights


def modulate(bits, c):
    """Map a flat bipolar sequence onto constellation points, N_m bits each."""
    bits = check_bipolar(bits)
    nm = c.bits_per_symbol
    if bits.shape[-1] % nm:
        raise LengthMismatch(f"{bits.shape[-1]} bits is not a multiple of {nm}")
    groups = bits.reshape(bits.shape[:-1] + (-1, nm))
    return c.points[bits_to_indices(groups, c)]


def symbol_probs(llrs, c):
    """Symbol PMF implied by independent per-bit LLRs.

    ``llrs`` has trailing dimension N_m; the result has trailing dimension M.
    Infinite LLRs act as hard bits.
    """
    llrs = check_llrs(llrs)
    if llrs.shape[-1] != c.bits_per_symbol:
        raise LengthMismatch(f"expected {c.bits_per_symbol} LLRs per symbol, got {llrs.shape[-1]}")
    t = np.tanh(0.5 * llrs)  # tanh(+/-inf) is exactly +/-1
    # (..., 1, N_m) * (M, N_m) -> product over bits
    factors = 0.5 * (1.0 + t[..., None, :] * c.labels)
    return np.prod(factors, axis=-1)


def soft_mean(llrs, c):
    return symbol_probs(llrs, c) @ c.points


def soft_second_moment(llrs, c):
    return symbol_probs(llrs, c) @ np.abs(c.points) ** 2


class SoftSymbolStats(NamedTuple):
    mean: np.ndarray
    var: np.ndarray


def soft_stats(llrs, c):
    """Posterior mean and variance of each symbol, variance clipped at 0."""
    p = symbol_probs(llrs, c)
    mean = p @ c.points
    var = p @ np.abs(c.points) ** 2 - np.abs(mean) ** 2
    return SoftSymbolStats(mean, np.maximum(var, 0.0))
