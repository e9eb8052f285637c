"""Time-frequency Gaussian splatting for binaural audio."""

from ._tfsplat import (
    Field,
    TfsplatError,
    env_distance,
    istft,
    lre_error,
    load_wav,
    mag_distance,
    run_cli,
    save_wav,
    sh_basis,
    simulate_free_field,
    stft,
    synthesize_scene,
)

__all__ = [
    "Field",
    "TfsplatError",
    "env_distance",
    "istft",
    "lre_error",
    "load_wav",
    "mag_distance",
    "run_cli",
    "save_wav",
    "sh_basis",
    "simulate_free_field",
    "stft",
    "synthesize_scene",
]
