"""Two-user Rayleigh interference channel and HARQ transmissions.

SNR is the desired-signal power per receive antenna over the unit noise
power; SIR is the desired-over-interference power ratio.  With unit-power
symbols on every stream this gives entry variances ``snr / N_s`` for the
desired channel and ``snr / (N_s * sir)`` for the interfering one.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DimensionMismatch
from .validation import check_complex


def db_to_lin(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class LinkConfig:
    N_t: int = 2
    N_r: int = 2
    N_s: int = 2
    snr_db: float = 10.0
    sir_db: float = 0.0
    mod_D: int = 4
    mod_I: int = 4

    def __post_init__(self):
        if self.N_t != self.N_s:
            raise ConfigError("the number of transmit antennas must equal the number of streams")
        if min(self.N_t, self.N_r, self.N_s) < 1:
            raise ConfigError("antenna and stream counts must be positive")
        if self.mod_D not in (4, 16) or self.mod_I not in (4, 16):
            raise ConfigError("modulation orders must be 4 or 16")

    @property
    def snr_lin(self):
        return float(db_to_lin(self.snr_db))

    @property
    def sir_lin(self):
        return float(db_to_lin(self.sir_db))


@dataclass
class TransmissionRecord:
    """One HARQ round: received vectors and both channel matrices.

    ``y`` has shape ``(..., N_r)`` and the channels ``(..., N_r, N_s)``;
    leading dimensions index symbol slots.
    """

    index: int
    y: np.ndarray
    H_D: np.ndarray
    H_I: np.ndarray

    def __post_init__(self):
        self.y = check_complex(self.y, "y")
        self.H_D = check_complex(self.H_D, "H_D")
        self.H_I = check_complex(self.H_I, "H_I")
        n_r = self.y.shape[-1]
        if self.H_D.shape[-2] != n_r or self.H_I.shape[-2] != n_r:
            raise DimensionMismatch(
                f"channels {self.H_D.shape}, {self.H_I.shape} do not match y {self.y.shape}")


def crandn(rng, size):
    """Standard circularly-symmetric complex Gaussian samples."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)


def draw_channels(cfg, rng, size=()):
    """Draw i.i.d. Rayleigh (H_D, H_I), each of shape ``size + (N_r, N_s)``."""
    if isinstance(size, (int, np.integer)):
        size = (size,)
    shape = tuple(size) + (cfg.N_r, cfg.N_s)
    g_d = crandn(rng, shape)
    g_i = crandn(rng, shape)
    var_d = cfg.snr_lin / cfg.N_s
    var_i = var_d / cfg.sir_lin
    return np.sqrt(var_d) * g_d, np.sqrt(var_i) * g_i


def transmit(x_d, x_i, H_D, H_I, rng, index=1, noise_var=1.0):
    """Form ``y = H_D x_D + H_I x_I + n`` with ``n ~ CN(0, noise_var I)``.

    Symbol vectors have shape ``(..., N_s)``; channels ``(..., N_r, N_s)``
    broadcast against them.  ``noise_var=0`` gives the noiseless output.
    """
    x_d = check_complex(x_d, "x_D")
    x_i = check_complex(x_i, "x_I")
    H_D = check_complex(H_D, "H_D")
    H_I = check_complex(H_I, "H_I")
    if H_D.shape[-1] != x_d.shape[-1] or H_I.shape[-1] != x_i.shape[-1]:
        raise DimensionMismatch("channel columns do not match symbol vector lengths")
    if H_D.shape[-2] != H_I.shape[-2]:
        raise DimensionMismatch("desired and interference channels differ in receive antennas")
    sig = (H_D @ x_d[..., None])[..., 0] + (H_I @ x_i[..., None])[..., 0]
    y = sig
    if noise_var:
        y = sig + np.sqrt(noise_var) * crandn(rng, sig.shape)
    return TransmissionRecord(index, y, H_D, H_I)
