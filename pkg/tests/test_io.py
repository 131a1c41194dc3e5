import json

import numpy as np
import pytest

from rigsolve import io as rio
from rigsolve import load_rig, load_targets, load_weights, save_rig, save_targets, save_weights


@pytest.fixture
def saved(small, tmp_path):
    return save_rig(small.rig, tmp_path)


def edit_manifest(path, fn):
    man = json.loads(path.read_text())
    fn(man)
    path.write_text(json.dumps(man))


def test_rig_roundtrip_bitwise(small, saved):
    back = load_rig(saved)
    assert back == small.rig
    assert back.blendshapes.tobytes(order="F") == small.rig.blendshapes.tobytes(order="F")


def test_blob_layout_is_little_endian_column_major(small, saved):
    man = json.loads(saved.read_text())
    raw = (saved.parent / man["data_file"]).read_bytes()
    sec = next(s for s in man["sections"] if s["kind"] == "blendshapes")
    blob = np.frombuffer(raw, dtype="<f8")
    B = small.rig.blendshapes
    # element (1, 0) directly follows (0, 0) in column-major order
    assert blob[sec["offset"]] == B[0, 0] and blob[sec["offset"] + 1] == B[1, 0]
    n_corr = sum(len(t) for t in small.rig.tables())
    assert len(raw) == 8 * small.rig.n_coords * (1 + small.rig.m + n_corr)


def test_missing_blob(saved):
    (saved.parent / "rig.bin").unlink()
    with pytest.raises(rio.DataFileNotFoundError, match="data file not found"):
        load_rig(saved)


def test_truncated_blob(saved):
    blob = saved.parent / "rig.bin"
    raw = blob.read_bytes()
    blob.write_bytes(raw[:-8])
    e = len(raw) // 8
    with pytest.raises(rio.TruncatedBlobError, match=f"truncated blob: expected {e} elements, found {e - 1}"):
        load_rig(saved)


def test_version_mismatch(saved):
    edit_manifest(saved, lambda m: m.update(format_version=2))
    with pytest.raises(rio.VersionMismatchError):
        load_rig(saved)


def test_unknown_field(saved):
    edit_manifest(saved, lambda m: m.update(comment="hi"))
    with pytest.raises(rio.SchemaError, match="unknown field"):
        load_rig(saved)
    edit_manifest(saved, lambda m: (m.pop("comment"), m["sections"][0].update(dtype="f8")))
    with pytest.raises(rio.SchemaError, match="unknown field"):
        load_rig(saved)


def test_overlapping_sections(saved):
    def shift(m):
        m["sections"][2]["offset"] -= 1
    edit_manifest(saved, shift)
    with pytest.raises(rio.OverlappingSectionsError):
        load_rig(saved)


@pytest.mark.parametrize("ctrl", [[3, 1], [0, 0], [0, 99], [0, 1, 2]])
def test_invalid_tuples(saved, ctrl):
    def bad(m):
        sec = next(s for s in m["sections"] if s["kind"] == "correction" and s["order"] == 2)
        sec["controllers"] = ctrl
    edit_manifest(saved, bad)
    with pytest.raises(rio.InvalidTupleError):
        load_rig(saved)


def test_errors_are_distinct():
    classes = [rio.VersionMismatchError, rio.SchemaError, rio.DataFileNotFoundError,
               rio.TruncatedBlobError, rio.OverlappingSectionsError, rio.InvalidTupleError,
               rio.DimensionMismatchError]
    assert len({c.code for c in classes}) == len(classes)
    assert all(issubclass(c, rio.FormatError) for c in classes)


def test_targets_roundtrip(small, tmp_path):
    p = save_targets(tmp_path / "t", small.targets)
    assert load_targets(p, small.rig).tobytes() == small.targets.tobytes()
    raw = (tmp_path / "t.bin").read_bytes()
    assert len(raw) == 8 * small.targets.size
    assert np.frombuffer(raw, "<f8")[small.targets.shape[1]] == small.targets[1, 0]  # frame-major


def test_absolute_targets_load_relative(small, tmp_path):
    p = save_targets(tmp_path / "abs", small.targets, small.rig, absolute=True)
    stored = np.frombuffer((tmp_path / "abs.bin").read_bytes(), "<f8").reshape(small.targets.shape)
    loaded = load_targets(p, small.rig)
    np.testing.assert_array_equal(loaded, stored - small.rig.neutral)
    assert json.loads(p.read_text())["coordinates"] == "absolute"


def test_weights_roundtrip_and_mismatch(small, tmp_path):
    prov = {"solver": "quadratic", "lambda": 2.5, "init": "zero", "rig_hash": rio.rig_hash(small.rig)}
    p = save_weights(tmp_path / "w", small.weights, prov)
    w, meta = load_weights(p, small.rig, with_meta=True)
    assert w.tobytes() == small.weights.tobytes()
    assert meta["provenance"] == prov and meta["n_frames"] == 12 and meta["m"] == 8
    assert (tmp_path / "w.bin").stat().st_size == 8 * 12 * 8
    save_weights(tmp_path / "w3", small.weights[:, :3])
    with pytest.raises(rio.DimensionMismatchError):
        load_weights(tmp_path / "w3", small.rig)


def test_rig_hash_sensitive(small):
    from rigsolve import Rig
    B = np.array(small.rig.blendshapes)
    B[0, 0] = np.nextafter(B[0, 0], np.inf)
    other = Rig(small.rig.neutral, B, small.rig.corrections2, small.rig.corrections3,
                small.rig.corrections4)
    assert rio.rig_hash(other) != rio.rig_hash(small.rig)
