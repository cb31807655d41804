"""HARQ combining for an interference-aware successive-decoding MIMO receiver."""

from .analysis import MixtureSpec, approx_llr, llr_gap_sweep, mixture_llr, residual_pdf
from .channel import LinkConfig, TransmissionRecord, draw_channels, transmit
from .combiner import (SCHEMES, BlcState, MemoryModel, SlcIcState, SslcState, blc_accumulate,
                       memory_units, slcic_cancel_and_whiten, slcic_combined_model,
                       slcic_update, sslc_stack)
from .detector import (Block, DetectorModel, IasdResult, LlrFrame, extrinsic, iasd_decode,
                       joint_maxlog_llrs)
from .exceptions import (ConfigError, DimensionMismatch, HypothesisCapExceeded, IasdError,
                         LengthMismatch, NonFinite, NonHermitian, ShapeMismatch, UnknownScheme)
from .fec import PacketCodec, TurboCode, decode, encode
from .harness import SimConfig, load_config, run_packet, run_per_experiment, \
    run_throughput_experiment
from .linalg import hermitian_inv_sqrt, hermitian_sqrt
from .modem import Constellation, SoftSymbolStats, modulate, qam, soft_stats, symbol_probs
from .receiver import (BitLevelReceiver, IasdReceiver, SlcIcReceiver, StackingReceiver,
                       make_receiver)

__version__ = "0.1.0"
