"""FSITM score of a tone-mapped image against its HDR source."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, InvalidParameter, OutOfRangeInput
from .image_io import Channel, HdrImage, LdrImage, log_compress
from .loggabor import FilterParams, lwmpa

HDR_PARAMS = FilterParams(nscale=2, min_wavelength=8, mult=8)
LOG_PARAMS = FilterParams(nscale=2, min_wavelength=2, mult=2)
DEFAULT_ALPHA = 0.5


@dataclass(frozen=True)
class FsitmConfig:
    """Scoring configuration.

    ``alpha`` weights the HDR reference against the log-HDR reference.
    ``hdr_params`` filter the linear HDR channel; ``log_params`` filter the
    log-HDR and LDR channels.
    """

    alpha: float = DEFAULT_ALPHA
    hdr_params: FilterParams = HDR_PARAMS
    log_params: FilterParams = LOG_PARAMS

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidParameter(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class ScoreRecord:
    hdr_id: str
    ldr_id: str
    channel: Channel
    fsitm: float
    tmqi: Optional[float] = None
    combined: Optional[float] = field(default=None, init=False)

    def __post_init__(self):
        if self.tmqi is not None:
            object.__setattr__(self, "combined", combine_with_tmqi(self.fsitm, self.tmqi))

    def as_dict(self) -> dict:
        return {
            "hdr_id": self.hdr_id,
            "ldr_id": self.ldr_id,
            "channel": self.channel.name,
            "fsitm": self.fsitm,
            "tmqi": self.tmqi,
            "combined": self.combined,
        }


def binarize(ph) -> np.ndarray:
    """Unit step of a phase map: True where ``ph > 0`` (so U(0) is False)."""
    return np.asarray(ph) > 0


def feature_similarity(p1, p2) -> float:
    """Fraction of pixels where two binary feature maps agree."""
    p1 = np.asarray(p1, dtype=bool)
    p2 = np.asarray(p2, dtype=bool)
    if p1.shape != p2.shape:
        raise DimensionMismatch(f"feature maps differ in shape: {p1.shape} vs {p2.shape}")
    return np.count_nonzero(p1 == p2) / p1.size


@dataclass(frozen=True)
class FeatureMaps:
    """Binary feature maps of one channel for the three images being compared."""

    hdr: np.ndarray
    log_hdr: np.ndarray
    ldr: np.ndarray

    def score(self, alpha: float) -> float:
        return (alpha * feature_similarity(self.hdr, self.ldr)
                + (1.0 - alpha) * feature_similarity(self.log_hdr, self.ldr))


def feature_maps(h: HdrImage, l: LdrImage, c, cfg: FsitmConfig | None = None) -> FeatureMaps:
    cfg = cfg or FsitmConfig()
    if h.shape != l.shape:
        raise DimensionMismatch(f"HDR is {h.width}x{h.height}, LDR is {l.width}x{l.height}")
    c = Channel.parse(c)
    log_h = log_compress(h)
    return FeatureMaps(
        hdr=binarize(lwmpa(h.channel(c), cfg.hdr_params)),
        log_hdr=binarize(lwmpa(log_h.channel(c), cfg.log_params)),
        ldr=binarize(lwmpa(l.channel(c), cfg.log_params)),
    )


def fsitm(h: HdrImage, l: LdrImage, c="G", cfg: FsitmConfig | None = None) -> float:
    """Feature similarity of LDR ``l`` to HDR ``h`` in channel ``c``.

    ``alpha * F(P_H, P_L) + (1 - alpha) * F(P_logH, P_L)`` where each ``P`` is
    the binarized phase map of the channel and ``F`` the agreement fraction.
    The result lies in [0, 1].
    """
    cfg = cfg or FsitmConfig()
    return feature_maps(h, l, c, cfg).score(cfg.alpha)


def combine_with_tmqi(fsitm_score: float, tmqi_score: float) -> float:
    for name, v in (("fsitm", fsitm_score), ("tmqi", tmqi_score)):
        if not 0.0 <= v <= 1.0:
            raise OutOfRangeInput(f"{name} score {v} is outside [0, 1]")
    return (fsitm_score + tmqi_score) / 2.0


def score_pair(h: HdrImage, l: LdrImage, c="G", cfg: FsitmConfig | None = None,
               tmqi: float | None = None) -> ScoreRecord:
    c = Channel.parse(c)
    value = fsitm(h, l, c, cfg)
    return ScoreRecord(
        hdr_id=h.source_path or "<hdr>",
        ldr_id=l.source_path or "<ldr>",
        channel=c,
        fsitm=value,
        tmqi=tmqi,
    )
