"""Estimator-style IASD receivers, one per HARQ combining scheme.

A receiver is reset at the start of a packet.  ``predict(record)`` decodes
the current transmission using whatever has been combined so far, and
``partial_fit(record)`` folds a failed transmission into the combining
state using the result of the preceding ``predict`` call::

    rx = make_receiver("slcic", codec_d=..., codec_i=...)
    for record in transmissions:
        bits = rx.predict(record)
        if ok(bits):
            break
        rx.partial_fit(record)
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .combiner import (BlcState, SlcIcState, SslcState, blc_accumulate,
                       slcic_cancel_and_whiten, slcic_combined_model, slcic_update,
                       sslc_stack)
from .detector import HYPOTHESIS_CAP, Block, DetectorModel, iasd_decode
from .exceptions import UnknownScheme
from .modem import qam


class IasdReceiver(BaseEstimator):
    """IASD receiver without HARQ combining; each transmission stands alone."""

    scheme = "none"

    def __init__(self, codec_d=None, codec_i=None, mod_d=4, mod_i=4, iasd_iters=4,
                 turbo_iters=8, order="desired_first", cap=HYPOTHESIS_CAP):
        self.codec_d = codec_d
        self.codec_i = codec_i
        self.mod_d = mod_d
        self.mod_i = mod_i
        self.iasd_iters = iasd_iters
        self.turbo_iters = turbo_iters
        self.order = order
        self.cap = cap

    def reset(self):
        self.n_combined_ = 0
        self.last_result_ = None
        return self

    def _check_started(self):
        if not hasattr(self, "n_combined_"):
            self.reset()

    def _model(self, record):
        c_d, c_i = qam(self.mod_d), qam(self.mod_i)
        return DetectorModel(record.y, [Block(record.H_D, c_d), Block(record.H_I, c_i)],
                             cap=self.cap), [self.codec_d, self.codec_i], None

    def predict(self, record, stop=None):
        """Run IASD on `record` and return the desired hard info bits."""
        self._check_started()
        model, codecs, offset = self._model(record)
        model.cap = self.cap
        self.last_result_ = iasd_decode(model, codecs, self.iasd_iters, self.order,
                                        self.turbo_iters, desired_offset=offset, stop=stop)
        return self.last_result_.hard_bits[0]

    def _fold(self, record, result):
        pass

    def partial_fit(self, record, result=None):
        """Store a failed transmission in the combining state."""
        self._check_started()
        result = self.last_result_ if result is None else result
        if result is None:
            raise NotFittedError("partial_fit needs the result of a preceding predict")
        self._fold(record, result)
        self.n_combined_ += 1
        return self


class BitLevelReceiver(IasdReceiver):
    """BLC: the decoder sees the sum of all desired extrinsics so far."""

    scheme = "blc"

    def reset(self):
        self.state_ = BlcState()
        return super().reset()

    def _model(self, record):
        model, codecs, _ = super()._model(record)
        return model, codecs, self.state_.llrs

    def _fold(self, record, result):
        self.state_ = blc_accumulate(self.state_, result.desired_extrinsic)


class StackingReceiver(IasdReceiver):
    """SSLC: joint detection over every stored transmission."""

    scheme = "sslc"

    def reset(self):
        self.state_ = SslcState()
        return super().reset()

    def _model(self, record):
        model = sslc_stack(self.state_, record, qam(self.mod_d), qam(self.mod_i))
        return model, [self.codec_d] + [self.codec_i] * (len(model.blocks) - 1), None

    def _fold(self, record, result):
        self.state_ = SslcState(self.state_.records + [record])


class SlcIcReceiver(IasdReceiver):
    """SLC-IC: cancel, whiten and MRC-combine failed transmissions."""

    scheme = "slcic"

    def reset(self):
        self.state_ = SlcIcState()
        return super().reset()

    def _model(self, record):
        if self.state_.empty:
            return super()._model(record)
        model = slcic_combined_model(self.state_, record, qam(self.mod_d), qam(self.mod_i))
        return model, [self.codec_d, self.codec_i], None

    def _fold(self, record, result):
        post_i = result.decoder_posteriors[-1]
        if post_i is None:
            post_i = np.zeros(record.H_I.shape[:-2] + (record.H_I.shape[-1],
                                                        qam(self.mod_i).bits_per_symbol))
        y_t, H_t = slcic_cancel_and_whiten(record, post_i, qam(self.mod_i))
        self.state_ = slcic_update(self.state_, y_t, H_t)


RECEIVERS = {cls.scheme: cls for cls in
             (IasdReceiver, BitLevelReceiver, StackingReceiver, SlcIcReceiver)}


def make_receiver(scheme, **params):
    try:
        cls = RECEIVERS[scheme]
    except KeyError:
        raise UnknownScheme(f"unknown combining scheme {scheme!r}") from None
    return cls(**params).reset()
