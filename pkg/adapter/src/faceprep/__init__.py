"""Offline pre-processing adapter for the facetex detection pipeline.

Decodes raw videos, localizes one face per video, and writes the three
artifacts the detector consumes: a grayscale PGM frame directory with an
fps sidecar, a 68-point landmark JSONL track, and the first-frame face
box. Landmark detection backends are pluggable; the built-in schematic
backend handles rendered synthetic faces so the toolchain can be
exercised without a heavyweight detector installed.
"""

from .adapter import AdapterOutput, process_batch, process_video
from .detect import available_detectors, get_detector

__version__ = "0.1.0"

__all__ = [
    "AdapterOutput",
    "available_detectors",
    "get_detector",
    "process_batch",
    "process_video",
]
