"""Constellation design and evaluation for Gaussian multiple access channels."""

from ._maclab import (
    Constellation,
    DaeConfig,
    DaeModel,
    MaclabError,
    PowerRegime,
    Scenario,
    __version__,
    bpsk,
    min_distance,
    ml_detect,
    normalize,
    pam,
    pam_orthogonal,
    parallelogram_md,
    parse_snr_grid,
    qpsk,
    read_constellation,
    read_curve,
    rotation_optimize,
    ser,
    sum_rate,
    superimpose,
    train,
    train_restarts,
    write_constellation,
)

__all__ = [
    "Constellation",
    "DaeConfig",
    "DaeModel",
    "MaclabError",
    "PowerRegime",
    "Scenario",
    "bpsk",
    "min_distance",
    "ml_detect",
    "normalize",
    "pam",
    "pam_orthogonal",
    "parallelogram_md",
    "parse_snr_grid",
    "qpsk",
    "read_constellation",
    "read_curve",
    "rotation_optimize",
    "ser",
    "sum_rate",
    "superimpose",
    "train",
    "train_restarts",
    "write_constellation",
]
