"""Wire-format fidelity of the standalone writers."""

import struct

import numpy as np
import pytest

from zosd_exporter import (
    FormatError,
    read_embedding_store,
    read_logits_words,
    write_embedding_store,
    write_logits_file,
)


def unit(values):
    arr = np.asarray(values, dtype=np.float64)
    return (arr / np.linalg.norm(arr)).astype(np.float32)


class TestEmbeddingStore:
    def test_exact_byte_layout(self, tmp_path):
        path = tmp_path / "layout.bin"
        write_embedding_store({"a": unit([1.0, 0.0]), "bé": unit([0.6, 0.8])}, path)
        key_b = "bé".encode("utf-8")
        expected = (
            b"ZOSDEMB1"
            + struct.pack("<II", 2, 2)
            + struct.pack("<I", 1) + b"a" + np.array([1.0, 0.0], "<f4").tobytes()
            + struct.pack("<I", len(key_b)) + key_b + np.array([0.6, 0.8], "<f4").tobytes()
        )
        assert path.read_bytes() == expected

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        store = {f"k{i}": unit(rng.normal(size=16)) for i in range(20)}
        path = tmp_path / "s.bin"
        write_embedding_store(store, path)
        loaded = read_embedding_store(path)
        assert list(loaded) == list(store)
        for key in store:
            assert loaded[key].tobytes() == store[key].tobytes()

    def test_rejects_non_unit_vectors(self, tmp_path):
        with pytest.raises(FormatError):
            write_embedding_store({"k": np.array([3.0, 4.0], np.float32)}, tmp_path / "x.bin")

    def test_rejects_mixed_dims(self, tmp_path):
        with pytest.raises(FormatError):
            write_embedding_store(
                {"a": unit([1, 0]), "b": unit([1, 0, 0])}, tmp_path / "x.bin"
            )

    def test_failed_write_leaves_no_file(self, tmp_path):
        path = tmp_path / "x.bin"
        with pytest.raises(FormatError):
            write_embedding_store({"a": unit([1, 0]), "b": np.ones(2, np.float32)}, path)
        assert not path.exists()


class TestLogitsFile:
    def test_write_and_word_scan(self, tmp_path):
        path = tmp_path / "l.jsonl"
        write_logits_file(
            [
                {
                    "image_id": "i1",
                    "stored_k": 2,
                    "positions": [[["boat", -0.1], ["sea", -0.4]]],
                },
                {
                    "image_id": "i2",
                    "stored_k": 2,
                    "positions": [[["dog", -0.2]], [["dog", -0.3], ["cat", -0.5]]],
                },
            ],
            path,
        )
        assert read_logits_words(path) == {"boat", "sea", "dog", "cat"}

    def test_rejects_unsorted_position(self, tmp_path):
        with pytest.raises(FormatError):
            write_logits_file(
                [{"image_id": "i", "stored_k": 2,
                  "positions": [[["low", -2.0], ["high", -0.1]]]}],
                tmp_path / "l.jsonl",
            )

    def test_rejects_overlong_position(self, tmp_path):
        with pytest.raises(FormatError):
            write_logits_file(
                [{"image_id": "i", "stored_k": 1,
                  "positions": [[["a", -0.1], ["b", -0.2]]]}],
                tmp_path / "l.jsonl",
            )
