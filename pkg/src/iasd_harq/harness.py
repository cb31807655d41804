"""HARQ Monte-Carlo experiments: configuration, packets, PER and throughput.

A packet carries ``info_bits`` desired bits split into turbo codewords,
bit-interleaved onto vector symbol slots.  Slot ``t`` uses subcarrier
``t % subcarriers``; each (transmission, subcarrier) pair gets its own
Rayleigh draw.  The interfering base station sends a fresh packet that
fills the same slots at its own rate and modulation.

Success is genie-aided: a transmission succeeds when the decoded desired
bits of every codeword equal the transmitted ones.
"""

import csv
import dataclasses
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .channel import LinkConfig, draw_channels, transmit
from .combiner import SCHEMES
from .exceptions import ConfigError
from .fec import PacketCodec, rate_fraction
from .modem import modulate, qam
from .receiver import make_receiver

MAX_TRANSMISSIONS = 8
PER_HEADER = ("snr_db", "sir_db", "scheme", "tx_index", "packets", "failures", "per")
THROUGHPUT_HEADER = ("snr_db", "mcs", "throughput")


@dataclass(frozen=True)
class SimConfig:
    link: LinkConfig = field(default_factory=LinkConfig)
    scheme: str = "slcic"
    rate_D: float = 0.33
    rate_I: float = 0.33
    N: int = 4
    packets: int = 2000
    subcarriers: int = 10
    codewords_per_packet: int = 2
    iasd_iters: int = 4
    turbo_iters: int = 8
    seed: int = 0
    info_bits: int = 400
    order: str = "desired_first"
    fading: str = "per_subcarrier"
    interleaver_seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme: expected one of {SCHEMES}, got {self.scheme!r}")
        for name in ("rate_D", "rate_I"):
            try:
                rate_fraction(getattr(self, name))
            except ConfigError as exc:
                raise ConfigError(f"{name}: {exc}") from None
        if not 1 <= self.N <= MAX_TRANSMISSIONS:
            raise ConfigError(f"N: must be between 1 and {MAX_TRANSMISSIONS}, got {self.N}")
        if self.packets < 1:
            raise ConfigError(f"packets: must be at least 1, got {self.packets}")
        if self.subcarriers < 1 or self.codewords_per_packet < 1:
            raise ConfigError("subcarriers and codewords_per_packet must be positive")
        if self.iasd_iters < 0 or self.turbo_iters < 1:
            raise ConfigError("iasd_iters must be >= 0 and turbo_iters >= 1")
        if self.fading not in ("per_subcarrier", "flat"):
            raise ConfigError(f"fading: expected 'per_subcarrier' or 'flat', got {self.fading!r}")
        if self.order not in ("desired_first", "interference_first"):
            raise ConfigError(f"order: unknown detection order {self.order!r}")

    def replace(self, **changes):
        link_changes = {k: changes.pop(k) for k in list(changes)
                        if k in {f.name for f in dataclasses.fields(LinkConfig)}}
        link = dataclasses.replace(self.link, **link_changes) if link_changes else self.link
        return dataclasses.replace(self, link=link, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
        link = data.pop("link", {})
        if not isinstance(link, dict):
            raise ConfigError("link: must be a JSON object")
        link_known = {f.name for f in dataclasses.fields(LinkConfig)}
        bad = sorted(set(link) - link_known)
        if bad:
            raise ConfigError(f"unknown link field(s): {', '.join(bad)}")
        try:
            return cls(link=LinkConfig(**link), **data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path):
    """Read a JSON config; errors carry the path and line/column."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return SimConfig.from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


@lru_cache(maxsize=32)
def codecs_for(cfg):
    link = cfg.link
    codec_d = PacketCodec.create(cfg.info_bits, cfg.codewords_per_packet, cfg.rate_D,
                                 link.N_s, qam(link.mod_D).bits_per_symbol,
                                 seed=cfg.interleaver_seed)
    codec_i = PacketCodec.for_symbols(codec_d.n_symbols, cfg.codewords_per_packet, cfg.rate_I,
                                      link.N_s, qam(link.mod_I).bits_per_symbol,
                                      seed=cfg.interleaver_seed + 1)
    return codec_d, codec_i


def receiver_for(cfg, scheme=None):
    codec_d, codec_i = codecs_for(cfg)
    return make_receiver(scheme or cfg.scheme, codec_d=codec_d, codec_i=codec_i,
                         mod_d=cfg.link.mod_D, mod_i=cfg.link.mod_I,
                         iasd_iters=cfg.iasd_iters, turbo_iters=cfg.turbo_iters,
                         order=cfg.order)


def random_bits(rng, n):
    return (1 - 2 * rng.integers(0, 2, n)).astype(np.int8)


def packet_rng(cfg, index):
    return np.random.default_rng([cfg.seed, index])


def transmissions(cfg, rng):
    """Yield ``(info_D, record)`` for up to N Chase transmissions of one packet.

    Randomness is consumed in a fixed order per transmission, so schemes
    that stop early see exactly the same earlier rounds as those that go on.
    """
    codec_d, codec_i = codecs_for(cfg)
    link = cfg.link
    c_d, c_i = qam(link.mod_D), qam(link.mod_I)
    info_d = random_bits(rng, codec_d.info_bits)
    x_d = modulate(codec_d.encode(info_d).reshape(codec_d.n_symbols, -1), c_d)
    slots = np.arange(codec_d.n_symbols) % cfg.subcarriers
    n_draws = cfg.subcarriers if cfg.fading == "per_subcarrier" else 1
    for i in range(1, cfg.N + 1):
        H_D, H_I = draw_channels(link, rng, n_draws)
        if n_draws == 1:
            H_D = np.repeat(H_D, cfg.subcarriers, axis=0)
            H_I = np.repeat(H_I, cfg.subcarriers, axis=0)
        info_i = random_bits(rng, codec_i.info_bits)
        x_i = modulate(codec_i.encode(info_i).reshape(codec_i.n_symbols, -1), c_i)
        yield info_d, transmit(x_d, x_i, H_D[slots], H_I[slots], rng, index=i)


def run_packet(cfg, rng, scheme=None):
    """Simulate one packet; returns cumulative success flags of length N.

    ``flags[i]`` is True when the packet has been decoded within i + 1
    transmissions.
    """
    rx = receiver_for(cfg, scheme)
    flags = np.zeros(cfg.N, dtype=bool)
    for info_d, rec in transmissions(cfg, rng):
        truth = info_d
        bits = rx.predict(rec, stop=lambda b: np.array_equal(b, truth))
        if np.array_equal(bits, info_d):
            flags[rec.index - 1:] = True
            break
        if rec.index < cfg.N:
            rx.partial_fit(rec)
    return flags


def _run_chunk(args):
    cfg, indices = args
    return np.array([run_packet(cfg, packet_rng(cfg, k)) for k in indices])


def worker_count():
    env = os.environ.get("IASD_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            raise ConfigError(f"IASD_THREADS must be an integer, got {env!r}") from None
    return n


def simulate_flags(cfg, workers=None):
    """Success flags for every packet, shape (packets, N), in packet order."""
    workers = worker_count() if workers is None else max(1, int(workers))
    indices = np.arange(cfg.packets)
    if workers == 1:
        return _run_chunk((cfg, indices))
    chunks = [c for c in np.array_split(indices, workers * 4) if c.size]
    with ProcessPoolExecutor(workers) as pool:
        parts = list(pool.map(_run_chunk, [(cfg, c) for c in chunks]))
    return np.concatenate(parts)


class PerRow(NamedTuple):
    snr_db: float
    sir_db: float
    scheme: str
    tx_index: int
    packets: int
    failures: int
    per: float


def run_per_experiment(cfg, snr_grid, workers=None):
    """PER after each transmission index, for every SNR in the grid."""
    snr_grid = list(snr_grid)
    if not snr_grid:
        raise ConfigError("SNR grid must not be empty")
    rows = []
    for snr in snr_grid:
        point = cfg.replace(snr_db=float(snr))
        flags = simulate_flags(point, workers)
        for i in range(cfg.N):
            failures = int(np.sum(~flags[:, i]))
            rows.append(PerRow(float(snr), cfg.link.sir_db, cfg.scheme, i + 1,
                               cfg.packets, failures, failures / cfg.packets))
    return rows


def mcs_label(mod, rate):
    return f"{mod}qam-r{float(rate):.2f}"


def throughput_from_flags(flags, bits_per_use):
    """Renewal-reward throughput: delivered info bits per consumed channel use."""
    success = flags[:, -1]
    consumed = np.where(success, np.argmax(flags, axis=1) + 1, flags.shape[1])
    return bits_per_use * success.mean() / consumed.mean()


def run_throughput_experiment(cfg, snr_grid, mcs=None, workers=None):
    """Throughput per MCS and SNR; `mcs` is a list of (QAM order, rate)."""
    snr_grid = list(snr_grid)
    if not snr_grid:
        raise ConfigError("SNR grid must not be empty")
    mcs = [(cfg.link.mod_D, cfg.rate_D)] if mcs is None else list(mcs)
    rows = []
    for mod, rate in mcs:
        base = cfg.replace(mod_D=int(mod), mod_I=int(mod), rate_D=rate, rate_I=rate)
        codec_d, _ = codecs_for(base)
        bits_per_use = codec_d.info_bits / codec_d.n_symbols
        for snr in snr_grid:
            flags = simulate_flags(base.replace(snr_db=float(snr)), workers)
            rows.append((float(snr), mcs_label(mod, rate),
                         float(throughput_from_flags(flags, bits_per_use))))
    return rows


def rows_to_csv(rows, header):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        # repr is the shortest string that parses back to the same float
        writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def write_csv(path, rows, header):
    text = rows_to_csv(rows, header)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return text
