"""Feature-file serialization.

A feature file starts with one JSON meta line (format tag plus the run
config echo), followed by one record per window: a JSON header line with
kind/mode/area/provenance/label, then a little-endian ``u32`` dimension
and that many little-endian ``f64`` values.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .descriptors import FeatureVector
from .errors import FormatError, SchemaError

FORMAT_TAG = "facetex-features/1"


def _json_line(obj: dict) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode() + b"\n"


def write_features(
    path: str | Path,
    records: Iterable[FeatureVector],
    config: Optional[dict] = None,
) -> int:
    """Write feature records; returns the number written."""
    count = 0
    with open(path, "wb") as fh:
        fh.write(_json_line({"format": FORMAT_TAG, "config": config or {}}))
        for fv in records:
            header = {
                "kind": fv.kind,
                "mode": fv.mode,
                "area": fv.area,
                "video_id": fv.video_id,
                "window_index": fv.window_index,
                "start_frame": fv.start_frame,
                "label": fv.label,
                "technique": fv.technique,
                "split": fv.split,
            }
            fh.write(_json_line(header))
            values = np.ascontiguousarray(fv.values, dtype="<f8")
            fh.write(struct.pack("<I", values.shape[0]))
            fh.write(values.tobytes())
            count += 1
    return count


def read_features(path: str | Path) -> tuple[dict, list[FeatureVector]]:
    """Read a feature file back into (meta, records)."""
    path = Path(path)
    records: list[FeatureVector] = []
    with open(path, "rb") as fh:
        meta_line = fh.readline()
        if not meta_line:
            raise FormatError(f"{path}: empty feature file")
        try:
            meta = json.loads(meta_line)
        except ValueError as exc:
            raise FormatError(f"{path}: bad meta line") from exc
        if meta.get("format") != FORMAT_TAG:
            raise SchemaError(
                f"{path}: expected format {FORMAT_TAG}, got {meta.get('format')!r}"
            )
        while True:
            header_line = fh.readline()
            if header_line == b"":
                break
            try:
                header = json.loads(header_line)
            except ValueError as exc:
                raise FormatError(
                    f"{path}: bad record header after {len(records)} records"
                ) from exc
            raw_dim = fh.read(4)
            if len(raw_dim) != 4:
                raise FormatError(f"{path}: truncated record {len(records)}")
            (dim,) = struct.unpack("<I", raw_dim)
            payload = fh.read(8 * dim)
            if len(payload) != 8 * dim:
                raise FormatError(f"{path}: truncated payload in record {len(records)}")
            values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
            records.append(
                FeatureVector(
                    values,
                    kind=header["kind"],
                    mode=header["mode"],
                    area=header["area"],
                    video_id=header.get("video_id", ""),
                    window_index=int(header.get("window_index", 0)),
                    start_frame=int(header.get("start_frame", 0)),
                    label=header.get("label"),
                    technique=header.get("technique"),
                    split=header.get("split"),
                )
            )
    return meta, records


def features_to_csv(path: str | Path, records: Iterable[FeatureVector]) -> None:
    """Debugging export: one row per record, header fields then values."""
    with open(path, "w") as fh:
        fh.write("video_id,window_index,kind,mode,area,label,values...\n")
        for fv in records:
            prefix = [
                fv.video_id,
                str(fv.window_index),
                fv.kind,
                fv.mode,
                fv.area,
                "" if fv.label is None else str(fv.label),
            ]
            values = ",".join(repr(v) for v in fv.values.tolist())
            fh.write(",".join(prefix) + "," + values + "\n")
