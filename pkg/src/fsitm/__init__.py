"""Feature similarity index for tone-mapped images (FSITM)."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    FsitmConfig,
    ScoreRecord,
    binarize,
    combine_with_tmqi,
    feature_similarity,
    fsitm,
    score_pair,
)
from .image_io import Channel, HdrImage, LdrImage, load_hdr, load_ldr, log_compress  # noqa: E402
from .loggabor import FilterParams, apply_bank, build_bank, local_phase, lwmpa  # noqa: E402

__all__ = [
    "Channel",
    "FilterParams",
    "FsitmConfig",
    "HdrImage",
    "LdrImage",
    "ScoreRecord",
    "apply_bank",
    "binarize",
    "build_bank",
    "combine_with_tmqi",
    "feature_similarity",
    "fsitm",
    "load_hdr",
    "load_ldr",
    "local_phase",
    "log_compress",
    "lwmpa",
    "score_pair",
]
