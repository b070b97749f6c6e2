"""Learned linking and refinement of per-frame video detections."""

import json
from os import PathLike
from typing import Optional, Union

from ._tubelink import (
    DataError,
    InvalidArgument,
    NumericError,
    SynthConfig,
    __version__,
    center_distance,
    gaussian_kernel,
    greedy_match,
    iou,
    simulate,
    smooth_series,
    _evaluate,
    _postprocess,
)

Path = Union[str, PathLike]


def _opt(p: Optional[Path]) -> Optional[str]:
    return None if p is None else str(p)


def postprocess(
    detections: Path,
    out: Path,
    linker: Optional[Path] = None,
    embed: Optional[Path] = None,
    video_meta: Optional[Path] = None,
    threshold: float = 0.7,
    sigma: float = 0.6,
    period_ms: Optional[float] = None,
) -> dict:
    """Link, rescore and smooth a detections file. Without a linker model the
    IoU baseline scorer is used. Returns timing stats."""
    stats = _postprocess(
        str(detections), str(out), _opt(linker), _opt(embed), _opt(video_meta), threshold, sigma, period_ms
    )
    return json.loads(stats)


def evaluate(detections: Path, gt: Path, classes: Path, iou_threshold: float = 0.5) -> dict:
    """mAP report (overall and per motion stratum) as a dict."""
    return json.loads(_evaluate(str(detections), str(gt), str(classes), iou_threshold))


__all__ = [
    "DataError",
    "InvalidArgument",
    "NumericError",
    "SynthConfig",
    "__version__",
    "center_distance",
    "evaluate",
    "gaussian_kernel",
    "greedy_match",
    "iou",
    "postprocess",
    "simulate",
    "smooth_series",
]
