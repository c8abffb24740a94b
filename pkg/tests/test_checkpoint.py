"""Checkpoint serialization: byte-stable round trips and integrity checks."""

import struct
import zlib

import numpy as np
import pytest

from specmix.checkpoint import MAGIC, Checkpoint, load_checkpoint, save_checkpoint
from specmix.errors import CheckpointError


def sample_arrays(seed=0):
    rng = np.random.default_rng(seed)
    return {
        "layer0.w": rng.normal(size=(3, 4)),
        "layer0.b": rng.normal(size=4),
        "emb": rng.normal(size=(5, 2)),
    }


SAMPLE_CONFIG = {"n_layers": 2, "mixing": "hartley", "d_model": 8}


class TestRoundTrip:
    def test_values_and_config_survive(self, tmp_path):
        path = tmp_path / "model.spmx"
        arrays = sample_arrays()
        save_checkpoint(path, SAMPLE_CONFIG, arrays)
        ckpt = load_checkpoint(path)
        assert isinstance(ckpt, Checkpoint)
        assert ckpt.config == SAMPLE_CONFIG
        assert set(ckpt.arrays) == set(arrays)
        for name, arr in arrays.items():
            assert ckpt.arrays[name].dtype == np.float64
            assert ckpt.arrays[name].tobytes() == np.asarray(arr, dtype="<f8").tobytes()

    def test_save_load_save_is_byte_identical(self, tmp_path):
        """Sorted entries + canonical JSON make the format reproducible."""
        first = tmp_path / "a.spmx"
        second = tmp_path / "b.spmx"
        save_checkpoint(first, SAMPLE_CONFIG, sample_arrays())
        ckpt = load_checkpoint(first)
        save_checkpoint(second, ckpt.config, ckpt.arrays)
        assert first.read_bytes() == second.read_bytes()

    def test_insertion_order_does_not_matter(self, tmp_path):
        arrays = sample_arrays()
        reversed_order = dict(reversed(list(arrays.items())))
        a, b = tmp_path / "a.spmx", tmp_path / "b.spmx"
        save_checkpoint(a, SAMPLE_CONFIG, arrays)
        save_checkpoint(b, SAMPLE_CONFIG, reversed_order)
        assert a.read_bytes() == b.read_bytes()

    def test_names_stored_sorted(self, tmp_path):
        path = tmp_path / "m.spmx"
        save_checkpoint(path, {}, sample_arrays())
        ckpt = load_checkpoint(path)
        assert list(ckpt.arrays) == sorted(ckpt.arrays)

    def test_non_float64_input_is_converted(self, tmp_path):
        path = tmp_path / "m.spmx"
        save_checkpoint(path, {}, {"x": np.arange(6, dtype=np.float32).reshape(2, 3)})
        loaded = load_checkpoint(path).arrays["x"]
        assert loaded.dtype == np.float64
        np.testing.assert_array_equal(loaded, np.arange(6.0).reshape(2, 3))

    def test_unicode_names_and_empty_config(self, tmp_path):
        path = tmp_path / "m.spmx"
        save_checkpoint(path, {}, {"emb.täble": np.ones((2, 2))})
        assert "emb.täble" in load_checkpoint(path).arrays


class TestCorruption:
    def test_flipped_payload_byte_rejected(self, tmp_path):
        path = tmp_path / "m.spmx"
        save_checkpoint(path, SAMPLE_CONFIG, sample_arrays())
        raw = bytearray(path.read_bytes())
        raw[len(raw) // 2] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError, match="checksum"):
            load_checkpoint(path)

    def test_flipped_config_byte_rejected(self, tmp_path):
        """The checksum covers the embedded config, not just array payloads."""
        path = tmp_path / "m.spmx"
        save_checkpoint(path, SAMPLE_CONFIG, sample_arrays())
        raw = bytearray(path.read_bytes())
        raw[14] ^= 0x01
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError, match="checksum"):
            load_checkpoint(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "m.spmx"
        save_checkpoint(path, {}, {"x": np.zeros(2)})
        raw = bytearray(path.read_bytes())
        raw[:4] = b"NOPE"
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_unknown_version_rejected(self, tmp_path):
        path = tmp_path / "m.spmx"
        save_checkpoint(path, {}, {"x": np.zeros(2)})
        raw = bytearray(path.read_bytes())
        raw[4:8] = struct.pack("<I", 99)
        # Recompute the trailing CRC so version is the only failure.
        body = bytes(raw[8:-4])
        raw[-4:] = struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError, match="version 99"):
            load_checkpoint(path)

    def test_truncated_file_rejected(self, tmp_path):
        path = tmp_path / "m.spmx"
        save_checkpoint(path, SAMPLE_CONFIG, sample_arrays())
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) - 20])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "m.spmx"
        path.write_bytes(b"")
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_trailing_garbage_rejected(self, tmp_path):
        path = tmp_path / "m.spmx"
        save_checkpoint(path, {}, {"x": np.zeros(3)})
        raw = bytearray(path.read_bytes())
        extra = b"\x00" * 8
        body = bytes(raw[8:-4]) + extra
        rebuilt = bytes(raw[:8]) + body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
        path.write_bytes(rebuilt)
        with pytest.raises(CheckpointError, match="trailing"):
            load_checkpoint(path)

    def test_magic_constant(self):
        assert MAGIC == b"SPMX"
