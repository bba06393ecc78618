import io

import numpy as np
import pytest

from deepshift.datasets import (
    DatasetError,
    read_dataset_csv,
    resample,
    synth_dataset,
    write_dataset_csv,
)


def test_synth_size():
    ds = synth_dataset(10, 50, 3, 12, seed=0)
    assert len(ds) == 500 and ds.x.shape == (500, 12, 3) and ds.n_classes == 10
    assert np.bincount(ds.labels).tolist() == [50] * 10


def test_zero_noise_classes_identical():
    ds = synth_dataset(3, 4, 2, 10, seed=1, noise=0.0)
    for k in range(3):
        members = ds.x[ds.labels == k]
        assert all(np.array_equal(m, members[0]) for m in members)
    assert not np.array_equal(ds.x[ds.labels == 0][0], ds.x[ds.labels == 1][0])


def test_seeds():
    a, b = synth_dataset(2, 3, 2, 8, seed=1), synth_dataset(2, 3, 2, 8, seed=2)
    assert a.x.shape == b.x.shape and not np.array_equal(a.x, b.x)
    assert np.array_equal(a.x, synth_dataset(2, 3, 2, 8, seed=1).x)


def test_bad_counts():
    with pytest.raises(DatasetError):
        synth_dataset(0, 3, 2, 8)


def test_resample_endpoints_and_length():
    seq = np.array([[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]])
    out = resample(seq, 5)
    assert out.shape == (5, 2)
    np.testing.assert_allclose(out[:, 0], [0, 1, 2, 3, 4])


def test_csv_round_trip():
    ds = synth_dataset(3, 2, 2, 6, seed=4)
    buf = io.StringIO()
    write_dataset_csv(ds, buf)
    back = read_dataset_csv(io.StringIO(buf.getvalue()))
    assert back.x.tobytes() == ds.x.tobytes()
    assert back.labels.tolist() == ds.labels.tolist()


def test_csv_without_sample_column_resamples():
    text = "c0,label\n1,a\n2,a\n3,b\n4,b\n5,b\n"
    ds = read_dataset_csv(io.StringIO(text), length=3)
    assert ds.x.shape == (2, 3, 1)
    np.testing.assert_allclose(ds.x[0, :, 0], [1.0, 1.5, 2.0])
    assert ds.labels.tolist() == [0, 1]


@pytest.mark.parametrize("text", ["c0,c1\n1,2\n", "c0,label\n1\n", "x,label\n1,a\n",
                                  "c0,label\nfoo,a\n"])
def test_csv_errors(text):
    with pytest.raises(DatasetError):
        read_dataset_csv(io.StringIO(text))
