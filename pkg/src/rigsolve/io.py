"""On-disk formats: JSON metadata next to raw little-endian float64 payloads.

Rig
    ``rig.json`` manifest listing sections (neutral, blendshapes, corrections)
    as element offsets into one ``.bin`` blob. Blendshapes are column-major.
Targets and weights
    ``name.json`` sidecar plus ``name.bin`` holding an ``(n_frames, width)``
    frame-major matrix.

Parsing is strict: unknown keys, wrong versions, overlapping or truncated
sections are rejected, each with its own exception class and error code.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .rig import Rig, RigError

__all__ = [
    "FORMAT_VERSION",
    "FormatError",
    "VersionMismatchError",
    "SchemaError",
    "DataFileNotFoundError",
    "TruncatedBlobError",
    "OverlappingSectionsError",
    "InvalidTupleError",
    "DimensionMismatchError",
    "save_rig",
    "load_rig",
    "rig_hash",
    "save_targets",
    "load_targets",
    "save_weights",
    "load_weights",
]

FORMAT_VERSION = 1
_LE = np.dtype("<f8")


class FormatError(Exception):
    """Base class for file format problems; ``code`` is stable and greppable."""

    code = "E_FORMAT"

    def __str__(self):
        return f"{self.code}: {super().__str__()}"


class VersionMismatchError(FormatError):
    code = "E_VERSION"


class SchemaError(FormatError):
    code = "E_SCHEMA"


class DataFileNotFoundError(FormatError):
    code = "E_NO_DATA_FILE"


class TruncatedBlobError(FormatError):
    code = "E_TRUNCATED"


class OverlappingSectionsError(FormatError):
    code = "E_OVERLAP"


class InvalidTupleError(FormatError):
    code = "E_TUPLE"


class DimensionMismatchError(FormatError):
    code = "E_DIMENSION"


_MANIFEST_KEYS = {"format_version", "n_vertices", "n_controllers", "data_file", "sections"}
_SECTION_KEYS = {
    "neutral": {"kind", "offset", "length"},
    "blendshapes": {"kind", "offset", "length"},
    "correction": {"kind", "order", "controllers", "offset", "length"},
}


def _read_json(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataFileNotFoundError(f"metadata file not found: {path}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: top level must be an object")
    return data


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise SchemaError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = allowed - set(obj)
    if missing:
        raise SchemaError(f"{where}: missing field(s) {sorted(missing)}")


def _int_field(obj: dict, key: str, where: str, minimum: int = 0) -> int:
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, int) or val < minimum:
        raise SchemaError(f"{where}: {key} must be an integer >= {minimum}, got {val!r}")
    return val


def _read_blob(path: Path, expected: int) -> np.ndarray:
    if not path.is_file():
        raise DataFileNotFoundError(f"data file not found: {path}")
    raw = path.read_bytes()
    found = len(raw) // 8
    if found < expected:
        raise TruncatedBlobError(
            f"truncated blob: expected {expected} elements, found {found}"
        )
    if len(raw) % 8:
        raise TruncatedBlobError(
            f"truncated blob: {len(raw)} bytes is not a whole number of float64 elements"
        )
    return np.frombuffer(raw, dtype=_LE).astype(np.float64)


def _write_blob(path: Path, arrays) -> None:
    with open(path, "wb") as fh:
        for arr in arrays:
            fh.write(np.asarray(arr, dtype=_LE).tobytes(order="C"))


def _rig_sections(rig: Rig):
    n3 = rig.n_coords
    offset = 0
    sections, payload = [], []

    def add(section, arr):
        nonlocal offset
        arr = np.asarray(arr, dtype=np.float64).ravel(order="F")
        section.update(offset=offset, length=int(arr.size))
        sections.append(section)
        payload.append(arr)
        offset += arr.size

    add({"kind": "neutral"}, rig.neutral)
    add({"kind": "blendshapes"}, rig.blendshapes)
    for table in rig.tables():
        for k, row in enumerate(table.controllers):
            add(
                {"kind": "correction", "order": table.order,
                 "controllers": [int(c) for c in row]},
                table.vectors[:, k],
            )
    assert all(s["length"] in (n3, n3 * rig.m) for s in sections)
    return sections, payload


def rig_hash(rig: Rig) -> str:
    """SHA-256 over the serialized manifest sections and payload."""
    sections, payload = _rig_sections(rig)
    h = hashlib.sha256()
    h.update(json.dumps(
        {"n_vertices": rig.n_vertices, "n_controllers": rig.m, "sections": sections},
        sort_keys=True,
    ).encode())
    for arr in payload:
        h.update(np.asarray(arr, dtype=_LE).tobytes())
    return h.hexdigest()


def save_rig(rig: Rig, directory, name: str = "rig") -> Path:
    """Write ``name.json`` and ``name.bin`` into ``directory``; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    sections, payload = _rig_sections(rig)
    data_file = f"{name}.bin"
    _write_blob(directory / data_file, payload)
    manifest = {
        "format_version": FORMAT_VERSION,
        "n_vertices": rig.n_vertices,
        "n_controllers": rig.m,
        "data_file": data_file,
        "sections": sections,
    }
    path = directory / f"{name}.json"
    path.write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8", newline="\n")
    return path


def load_rig(manifest_path) -> Rig:
    """Read a rig written by :func:`save_rig`; bitwise identical payloads."""
    path = Path(manifest_path)
    man = _read_json(path)
    if "format_version" in man and man["format_version"] != FORMAT_VERSION:
        raise VersionMismatchError(
            f"unsupported format_version {man['format_version']!r}, expected {FORMAT_VERSION}"
        )
    _check_keys(man, _MANIFEST_KEYS, "manifest")
    n = _int_field(man, "n_vertices", "manifest", 1)
    m = _int_field(man, "n_controllers", "manifest", 1)
    if not isinstance(man["data_file"], str) or not isinstance(man["sections"], list):
        raise SchemaError("manifest: data_file must be a string and sections a list")
    n3 = 3 * n

    sections = []
    for idx, sec in enumerate(man["sections"]):
        where = f"section {idx}"
        if not isinstance(sec, dict) or sec.get("kind") not in _SECTION_KEYS:
            raise SchemaError(f"{where}: unknown or missing kind")
        _check_keys(sec, _SECTION_KEYS[sec["kind"]], where)
        offset = _int_field(sec, "offset", where)
        length = _int_field(sec, "length", where)
        expected = n3 * m if sec["kind"] == "blendshapes" else n3
        if length != expected:
            raise SchemaError(f"{where}: length {length} does not match expected {expected}")
        if sec["kind"] == "correction":
            order = sec["order"]
            ctrl = sec["controllers"]
            if order not in (2, 3, 4):
                raise InvalidTupleError(f"{where}: correction order {order!r} not in 2..4")
            if (
                not isinstance(ctrl, list)
                or len(ctrl) != order
                or not all(isinstance(c, int) and not isinstance(c, bool) for c in ctrl)
            ):
                raise InvalidTupleError(f"{where}: controllers {ctrl!r} invalid for order {order}")
        sections.append((offset, length, sec))

    kinds = [s["kind"] for _, _, s in sections]
    if kinds.count("neutral") != 1 or kinds.count("blendshapes") != 1:
        raise SchemaError("manifest needs exactly one neutral and one blendshapes section")

    spans = sorted((off, off + ln) for off, ln, _ in sections)
    for (a0, a1), (b0, _) in zip(spans, spans[1:]):
        if b0 < a1:
            raise OverlappingSectionsError(
                f"sections overlap: [{a0}, {a1}) and one starting at {b0}"
            )
    end = max((e for _, e in spans), default=0)
    blob = _read_blob(path.parent / man["data_file"], end)

    neutral = B = None
    corr = {2: [], 3: [], 4: []}
    for off, ln, sec in sections:
        chunk = blob[off:off + ln]
        if sec["kind"] == "neutral":
            neutral = chunk
        elif sec["kind"] == "blendshapes":
            B = chunk.reshape((n3, m), order="F")
        else:
            corr[sec["order"]].append((tuple(sec["controllers"]), chunk))
    try:
        return Rig(neutral, B, corr[2], corr[3], corr[4])
    except RigError as exc:
        if exc.field.startswith("corrections"):
            raise InvalidTupleError(str(exc)) from None
        raise SchemaError(str(exc)) from None


def _pair_paths(path) -> tuple[Path, Path]:
    path = Path(path)
    stem = path.with_suffix("") if path.suffix in (".json", ".bin") else path
    return stem.with_name(stem.name + ".json"), stem.with_name(stem.name + ".bin")


def _save_matrix(path, matrix: np.ndarray, meta: dict) -> Path:
    meta_path, data_path = _pair_paths(path)
    meta_path.parent.mkdir(parents=True, exist_ok=True)
    _write_blob(data_path, [np.ascontiguousarray(matrix)])
    meta = {
        "format_version": FORMAT_VERSION, "data_file": data_path.name,
        "n_frames": int(matrix.shape[0]), **meta,
    }
    meta_path.write_text(json.dumps(meta, indent=1) + "\n", encoding="utf-8", newline="\n")
    return meta_path


def _load_matrix(path, keys: set, width_key: str):
    meta_path, _ = _pair_paths(path)
    meta = _read_json(meta_path)
    if "format_version" in meta and meta["format_version"] != FORMAT_VERSION:
        raise VersionMismatchError(
            f"unsupported format_version {meta['format_version']!r}, expected {FORMAT_VERSION}"
        )
    _check_keys(meta, keys | {"format_version", "data_file", "n_frames", width_key}, str(meta_path))
    frames = _int_field(meta, "n_frames", str(meta_path), 1)
    width = _int_field(meta, width_key, str(meta_path), 1)
    blob = _read_blob(meta_path.parent / meta["data_file"], frames * width)
    if blob.size != frames * width:
        raise SchemaError(
            f"{meta_path}: blob has {blob.size} elements, expected {frames * width}"
        )
    return blob.reshape(frames, width), meta


def save_targets(path, targets, rig: Rig | None = None, *, absolute: bool = False) -> Path:
    """Store target meshes; with ``absolute=True`` the neutral is added on disk."""
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if absolute:
        if rig is None:
            raise ValueError("absolute coordinates need the rig's neutral mesh")
        targets = targets + rig.neutral
    return _save_matrix(
        path, targets,
        {"n_coords": int(targets.shape[1]),
         "coordinates": "absolute" if absolute else "relative"},
    )


def load_targets(path, rig: Rig | None = None) -> np.ndarray:
    """Neutral-relative targets, shape ``(n_frames, 3n)``."""
    data, meta = _load_matrix(path, {"coordinates"}, "n_coords")
    if meta["coordinates"] not in ("absolute", "relative"):
        raise SchemaError(f"coordinates must be 'absolute' or 'relative', got {meta['coordinates']!r}")
    if rig is not None and data.shape[1] != rig.n_coords:
        raise DimensionMismatchError(
            f"targets have {data.shape[1]} coordinates, rig has {rig.n_coords}"
        )
    if meta["coordinates"] == "absolute":
        if rig is None:
            raise ValueError("absolute targets need the rig to subtract its neutral")
        data = data - rig.neutral
    return data


def save_weights(path, weights, provenance: dict | None = None) -> Path:
    weights = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    return _save_matrix(
        path, weights, {"m": int(weights.shape[1]), "provenance": dict(provenance or {})}
    )


def load_weights(path, rig: Rig | None = None, *, with_meta: bool = False):
    """Weights ``(n_frames, m)``; checks ``m`` against ``rig`` when given."""
    data, meta = _load_matrix(path, {"provenance"}, "m")
    if rig is not None and data.shape[1] != rig.m:
        raise DimensionMismatchError(f"weights have m={data.shape[1]}, rig has m={rig.m}")
    return (data, meta) if with_meta else data
