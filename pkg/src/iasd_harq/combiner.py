"""HARQ combining schemes for an IASD receiver, and their memory cost.

* Bit-level combining (BLC) sums the desired-signal detector extrinsics
  of every transmission.
* Stacking symbol-level combining (SSLC) stacks all received vectors into
  one detection problem with one interference block per transmission.
* Symbol-level combining with interference cancellation (SLC-IC) soft-
  cancels each failed transmission's interference, whitens the residual,
  and keeps only the MRC statistics ``y_hat = sum H~^H y~`` and
  ``H_hat = sum H~^H H~``.

Every array has a leading symbol-slot axis; SLC-IC statistics are per slot
because the soft interference covariance varies from slot to slot.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .detector import Block, DetectorModel, LlrFrame
from .exceptions import ShapeMismatch, UnknownScheme
from .linalg import EIG_FLOOR, hermitian_inv_sqrt, hermitian_sqrt
from .modem import soft_stats
from .validation import check_same_shape

SCHEMES = ("none", "blc", "sslc", "slcic")


def _herm(A):
    return np.conj(np.swapaxes(A, -1, -2))


@dataclass
class BlcState:
    llrs: Optional[np.ndarray] = None


def blc_accumulate(state, ext):
    """Add a desired-signal extrinsic frame to the running sum."""
    values = ext.values if isinstance(ext, LlrFrame) else np.asarray(ext, dtype=float)
    if state.llrs is None:
        return BlcState(values.copy())
    check_same_shape(state.llrs, values, "BLC state and extrinsic frame")
    return BlcState(state.llrs + values)


@dataclass
class SslcState:
    records: list = field(default_factory=list)


def sslc_stack(state, rec, c_d, c_i):
    """Stacked model over all stored transmissions plus `rec`.

    The desired block stacks every ``H_D,k`` vertically; interference block
    k holds ``H_I,k`` in the rows of transmission k and zeros elsewhere.
    """
    records = list(state.records) + [rec]
    n_r = rec.y.shape[-1]
    for r in records:
        if r.y.shape != rec.y.shape or r.H_D.shape != rec.H_D.shape or r.H_I.shape != rec.H_I.shape:
            raise ShapeMismatch("stacked transmissions must share dimensions")
    y = np.concatenate([r.y for r in records], axis=-1)
    H_D = np.concatenate([r.H_D for r in records], axis=-2)
    blocks = [Block(H_D, c_d)]
    for k, r in enumerate(records):
        H = np.zeros(r.H_I.shape[:-2] + (n_r * len(records), r.H_I.shape[-1]), dtype=complex)
        H[..., k * n_r:(k + 1) * n_r, :] = r.H_I
        blocks.append(Block(H, c_i))
    return DetectorModel(y, blocks)


@dataclass
class SlcIcState:
    y_hat: Optional[np.ndarray] = None
    H_hat: Optional[np.ndarray] = None

    @property
    def empty(self):
        return self.y_hat is None


def slcic_cancel_and_whiten(rec, post_i, c_i):
    """Soft-cancel interference and whiten the residual plus noise.

    `post_i` holds the decoder a-posteriori LLRs of the interference bits,
    shape ``(..., N_s, N_m)``.  Returns ``(y_tilde, H_tilde)``.
    """
    values = post_i.values if isinstance(post_i, LlrFrame) else post_i
    mean, var = soft_stats(values, c_i)
    if mean.shape[-1] != rec.H_I.shape[-1]:
        raise ShapeMismatch("interference LLRs do not match the interference channel")
    y_acute = rec.y - (rec.H_I @ mean[..., None])[..., 0]
    R = (rec.H_I * var[..., None, :]) @ _herm(rec.H_I) + np.eye(rec.y.shape[-1])
    W = hermitian_inv_sqrt(R)
    return (W @ y_acute[..., None])[..., 0], W @ rec.H_D


def slcic_update(state, y_tilde, H_tilde):
    """MRC-accumulate one whitened transmission into the state."""
    y_term = (_herm(H_tilde) @ y_tilde[..., None])[..., 0]
    H_term = _herm(H_tilde) @ H_tilde
    if state.empty:
        return SlcIcState(y_term, H_term)
    if state.y_hat.shape != y_term.shape or state.H_hat.shape != H_term.shape:
        raise ShapeMismatch("whitened transmission does not match the stored statistics")
    return SlcIcState(state.y_hat + y_term, state.H_hat + H_term)


def slcic_combined_model(state, rec_next, c_d, c_i, floor=EIG_FLOOR):
    """Detection model ``[H_hat^-1/2 y_hat ; y]`` for the next transmission.

    The desired block is ``[H_hat^1/2 ; H_D]`` and the single interference
    block ``[0 ; H_I]``; the noise of the top rows is white by construction.
    """
    if state.empty:
        raise ShapeMismatch("SLC-IC state is empty")
    inv_sqrt = hermitian_inv_sqrt(state.H_hat, floor)
    top_y = (inv_sqrt @ state.y_hat[..., None])[..., 0]
    top_H = hermitian_sqrt(state.H_hat, floor)
    y = np.concatenate([np.broadcast_to(top_y, rec_next.y.shape[:-1] + top_y.shape[-1:]),
                        rec_next.y], axis=-1)
    H_D = np.concatenate([np.broadcast_to(top_H, rec_next.H_D.shape[:-2] + top_H.shape[-2:]),
                          rec_next.H_D], axis=-2)
    zeros = np.zeros(rec_next.H_I.shape[:-2] + (top_H.shape[-2], rec_next.H_I.shape[-1]))
    H_I = np.concatenate([zeros, rec_next.H_I], axis=-2)
    return DetectorModel(y, [Block(H_D, c_d), Block(H_I, c_i)])


@dataclass(frozen=True)
class MemoryModel:
    scheme: str
    n_m: int = 2
    n_s: int = 2
    n_r: int = 2
    i: int = 1


def memory_units(m):
    """Real-valued memory units needed before detecting transmission `m.i`."""
    if m.scheme == "blc":
        return m.n_m * m.n_s
    if m.scheme == "sslc":
        return 2 * (m.i - 1) * m.n_s * m.n_r
    if m.scheme == "slcic":
        return (m.n_s + 2) * m.n_s
    raise UnknownScheme(f"no memory model for scheme {m.scheme!r}")
