import gzip
import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tsetlin_index import ChecksumError, DatasetFormatError, ShapeError
from tsetlin_index.data_pipeline import (BinarizeSpec, BoolDataset, binarize_images, build_vocabulary,
                                         load_dataset, load_idx_images, load_labels, load_vocabulary,
                                         noisy_xor, save_dataset, save_vocabulary, tokenize,
                                         vectorize_text, write_idx_images, write_idx_labels)


# --- images -----------------------------------------------------------------


@pytest.mark.parametrize("bits", [1, 2, 3, 4])
def test_black_pixel_is_all_zero(bits):
    ds = binarize_images(np.zeros((1, 5), dtype=np.uint8), BinarizeSpec(bits))
    assert ds.o == 5 * bits
    assert not ds.features.any()


def test_width_is_pixels_times_bits():
    ds = binarize_images(np.zeros((2, 28, 28), dtype=np.uint8), BinarizeSpec(2))
    assert ds.o == 1568


def test_explicit_thresholds():
    spec = BinarizeSpec(2, (85, 170))
    ds = binarize_images(np.array([[200, 100, 85, 84]]), spec)
    assert ds.features[0].tolist() == [1, 1, 1, 0, 1, 0, 0, 0]


def test_default_thresholds_are_evenly_spaced():
    assert BinarizeSpec(1).thresholds == (128,)
    assert BinarizeSpec(3).thresholds == (64, 128, 191)


@pytest.mark.parametrize("kwargs", [dict(bits=0), dict(bits=5), dict(bits=2, thresholds=(100,)),
                                    dict(bits=2, thresholds=(170, 85)), dict(bits=1, thresholds=(0,))])
def test_bad_binarize_spec(kwargs):
    with pytest.raises(ValueError):
        BinarizeSpec(**kwargs)


def test_out_of_range_pixels():
    with pytest.raises(ValueError):
        binarize_images(np.array([[256]]), BinarizeSpec())
    with pytest.raises(ShapeError):
        binarize_images(np.zeros((0, 4)), BinarizeSpec())


@given(st.integers(0, 255), st.integers(0, 255), st.integers(1, 4))
def test_thermometer_is_monotone(a, b, bits):
    lo, hi = sorted((a, b))
    f = binarize_images(np.array([[lo], [hi]]), BinarizeSpec(bits)).features
    assert np.all(f[0] <= f[1])
    # thermometer: once a bit is off, every higher bit is off
    assert np.all(np.diff(f[1].astype(int)) <= 0)


def test_bits_must_divide_width():
    with pytest.raises(ShapeError):
        BoolDataset(np.zeros((1, 7)), np.zeros(1), 1, {"bits": 3})


# --- text -------------------------------------------------------------------


def test_tokenize():
    assert tokenize("Don't STOP, 2 times!") == ["don't", "stop", "2", "times"]


def test_empty_document_is_zero_row():
    ds = vectorize_text(["", "good film"], ["good", "film"], labels=[0, 1])
    assert ds.features.tolist() == [[0, 0], [1, 1]]


def test_vocabulary_order_and_size():
    docs = ["b a a", "a c", "c b", "d"]
    # df: a=2, b=2, c=2, d=1, ties lexicographic
    assert build_vocabulary(docs, 3) == ["a", "b", "c"]
    words = [f"w{i}" for i in range(6000)]
    vocab = build_vocabulary([" ".join(words)], 5000)
    assert len(vocab) == 5000 and vocab == sorted(words)[:5000]


def test_shared_token_sets_same_column():
    ds = vectorize_text(["great acting", "great plot"], ["great", "plot", "acting"])
    assert ds.features[:, 0].tolist() == [1, 1]
    assert ds.features[:, 1].tolist() == [0, 1]


def test_empty_vocabulary_rejected():
    with pytest.raises(ValueError):
        vectorize_text(["x"], [])
    with pytest.raises(ValueError):
        build_vocabulary(["x"], 0)


def test_vocabulary_file_round_trip(tmp_path):
    path = tmp_path / "vocab.txt"
    save_vocabulary(path, ["b", "a"])
    assert load_vocabulary(path) == ["b", "a"]


# --- IDX --------------------------------------------------------------------


@pytest.fixture
def idx_files(tmp_path):
    images = np.arange(4 * 3 * 2, dtype=np.uint8).reshape(4, 3, 2) * 10
    labels = np.array([0, 1, 2, 1], dtype=np.uint8)
    write_idx_images(tmp_path / "img.idx", images)
    write_idx_labels(tmp_path / "lab.idx", labels)
    return tmp_path, images, labels


def test_idx_round_trip(idx_files):
    path, images, labels = idx_files
    np.testing.assert_array_equal(load_idx_images(path / "img.idx"), images.reshape(4, 6))
    assert load_labels(path / "lab.idx").tolist() == labels.tolist()


def test_idx_gzip(tmp_path):
    images = np.full((2, 2, 2), 7, dtype=np.uint8)
    write_idx_images(tmp_path / "img.idx.gz", images)
    assert (tmp_path / "img.idx.gz").read_bytes()[:2] == b"\x1f\x8b"
    assert load_idx_images(tmp_path / "img.idx.gz").tolist() == [[7] * 4] * 2


def test_idx_wrong_magic(idx_files):
    path = idx_files[0]
    with pytest.raises(DatasetFormatError, match="magic"):
        load_idx_images(path / "lab.idx")


def test_idx_truncated_and_trailing(idx_files):
    path = idx_files[0]
    data = (path / "img.idx").read_bytes()
    (path / "cut.idx").write_bytes(data[:-1])
    with pytest.raises(DatasetFormatError, match="truncated"):
        load_idx_images(path / "cut.idx")
    (path / "long.idx").write_bytes(data + b"\0")
    with pytest.raises(DatasetFormatError, match="dimension mismatch"):
        load_idx_images(path / "long.idx")
    (path / "head.idx").write_bytes(data[:6])
    with pytest.raises(DatasetFormatError, match="truncated"):
        load_idx_images(path / "head.idx")


def test_label_out_of_range(idx_files):
    path = idx_files[0]
    with pytest.raises(ValueError):
        load_labels(path / "lab.idx", m=2)
    assert len(load_labels(path / "lab.idx", m=3)) == 4


def test_idx_gzip_matches_plain(tmp_path):
    labels = np.array([3, 1, 4], dtype=np.uint8)
    raw = struct.pack(">II", 0x801, 3) + labels.tobytes()
    (tmp_path / "a.gz").write_bytes(gzip.compress(raw))
    assert load_labels(tmp_path / "a.gz").tolist() == [3, 1, 4]


# --- dataset files ----------------------------------------------------------


def test_dataset_round_trip(tmp_path, rng):
    pixels = rng.integers(0, 256, (9, 13))
    ds = binarize_images(pixels, BinarizeSpec(3), labels=rng.integers(0, 4, 9), m=4, source="unit")
    save_dataset(tmp_path / "d.tmds", ds)
    assert load_dataset(tmp_path / "d.tmds") == ds


def test_dataset_corruption_detected(tmp_path):
    ds = noisy_xor(20, rng=0)
    path = tmp_path / "d.tmds"
    save_dataset(path, ds)
    data = bytearray(path.read_bytes())
    data[-10] ^= 0x01
    path.write_bytes(bytes(data))
    with pytest.raises(ChecksumError):
        load_dataset(path)


def test_dataset_version_and_magic(tmp_path):
    path = tmp_path / "d.tmds"
    save_dataset(path, noisy_xor(3, rng=0))
    data = bytearray(path.read_bytes())
    data[4] = 9
    path.write_bytes(bytes(data))
    with pytest.raises(DatasetFormatError, match="version"):
        load_dataset(path)
    data[:4] = b"NOPE"
    path.write_bytes(bytes(data))
    with pytest.raises(DatasetFormatError, match="magic"):
        load_dataset(path)


def test_noisy_xor_labels():
    ds = noisy_xor(2000, noise=0.0, rng=1)
    assert ds.m == 2 and ds.o == 12
    assert np.array_equal(ds.labels, ds.features[:, 0] ^ ds.features[:, 1])
    noisy = noisy_xor(20000, noise=0.1, rng=1)
    rate = np.mean(noisy.labels != (noisy.features[:, 0] ^ noisy.features[:, 1]))
    assert abs(rate - 0.1) < 0.01
