"""Shared result container for the segmentation pipelines."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class SegmentationResult:
    """Output of a full segmentation pipeline.

    ``mask`` is the final lung mask, ``parenchyma`` the input with
    everything outside the mask zeroed.  ``threshold`` is set by the
    thresholding pipeline, ``iterations`` by the iterative ones.
    ``stages`` records the intermediate images in pipeline order as
    (name, array) pairs for inspection and the CLI stage dump.
    """

    mask: np.ndarray
    parenchyma: np.ndarray
    threshold: float | None = None
    iterations: int | None = None
    stages: list[tuple[str, np.ndarray]] = field(default_factory=list)
