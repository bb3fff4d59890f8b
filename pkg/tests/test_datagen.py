import numpy as np
import pytest

from shufflegrad import Dataset, GenSpec, RidgeProblem, generate, load, planted_weights, save
from shufflegrad.errors import DataFormatError, InvalidParameter


def test_postconditions():
    ds = generate(GenSpec(m=100, d=10, spectrum="uniform", noise=0.3, seed=0))
    assert ds.m == 100 and ds.d == 10
    assert np.linalg.norm(ds.X, axis=1).max() == pytest.approx(1.0, abs=1e-12)
    assert np.abs(ds.y).max() <= 1.0


def test_determinism():
    spec = GenSpec(m=50, d=4, spectrum="geometric", decay=0.7, noise=0.1, seed=9)
    a, b = generate(spec), generate(spec)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)
    c = generate(GenSpec(m=50, d=4, spectrum="geometric", decay=0.7, noise=0.1, seed=10))
    assert not np.array_equal(a.X, c.X)


def test_noiseless_recovery():
    # Zero noise, no clipping, full-rank spectrum: exact least squares
    # returns the planted direction.
    spec = GenSpec(m=4000, d=10, spectrum="uniform", noise=0.0, signal_norm=0.9, seed=3)
    ds = generate(spec)
    w_true = planted_weights(spec)
    w_hat = RidgeProblem(ds, alpha=0.0).wstar
    cosine = w_hat @ w_true / (np.linalg.norm(w_hat) * np.linalg.norm(w_true))
    assert np.arccos(np.clip(cosine, -1, 1)) <= 1e-6
    assert np.allclose(w_hat, w_true, atol=1e-8)


def test_geometric_spectrum_conditioning():
    spec = GenSpec(m=100_000, d=8, spectrum="geometric", decay=0.5, seed=4)
    ds = generate(spec)
    evals = np.linalg.eigvalsh(ds.X.T @ ds.X / ds.m)
    ratio = evals[-1] / evals[0]
    target = 2.0**7
    assert target / 2 <= ratio <= target * 2


def test_spec_validation():
    with pytest.raises(InvalidParameter):
        GenSpec(m=0, d=3)
    with pytest.raises(InvalidParameter):
        GenSpec(m=3, d=3, spectrum="banana")
    with pytest.raises(InvalidParameter):
        GenSpec(m=3, d=3, spectrum="geometric", decay=0.0)


def test_roundtrip_bit_exact(tmp_path):
    for seed in range(100):
        ds = generate(GenSpec(m=7, d=5, noise=0.4, seed=seed))
        path = tmp_path / f"ds{seed}.txt"
        save(ds, path)
        back = load(path)
        assert np.array_equal(ds.X, back.X)
        assert np.array_equal(ds.y, back.y)


def test_sparse_line_parsing(tmp_path):
    path = tmp_path / "sparse.txt"
    path.write_text("#dim 8\n1 3:0.5 7:0.25\n")
    ds = load(path)
    assert ds.y[0] == 1.0
    expected = np.zeros(8)
    expected[2], expected[6] = 0.5, 0.25
    assert np.array_equal(ds.X[0], expected)


def test_load_rejects_invariant_violations(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("#dim 2\n2.0 1:0.5\n")
    with pytest.raises(DataFormatError):
        load(path)
    normalized = load(path, normalize=True)
    assert np.abs(normalized.y).max() <= 1.0

    path2 = tmp_path / "bignorm.txt"
    path2.write_text("#dim 2\n0.5 1:3.0 2:4.0\n")
    with pytest.raises(DataFormatError):
        load(path2)
    fixed = load(path2, normalize=True)
    assert np.linalg.norm(fixed.X, axis=1).max() <= 1.0 + 1e-12


@pytest.mark.parametrize(
    "content,fragment",
    [
        ("0.5 1:0.1\n", "header"),
        ("#dim 2\nfoo 1:0.1\n", "line 2"),
        ("#dim 2\n0.5 9:0.1\n", "line 2"),
        ("#dim 2\n0.5 1:zzz\n", "line 2"),
        ("#dim 2\n0.5 1:0.1 1:0.2\n", "duplicate"),
        ("#dim 2\n", "no data"),
    ],
)
def test_malformed_files_report_location(tmp_path, content, fragment):
    path = tmp_path / "bad.txt"
    path.write_text(content)
    with pytest.raises(DataFormatError) as err:
        load(path)
    assert fragment in str(err.value)


def test_save_skips_zeros(tmp_path):
    ds = Dataset(X=np.array([[0.5, 0.0], [0.0, 0.25]]), y=np.array([1.0, -1.0]))
    path = tmp_path / "z.txt"
    save(ds, path)
    text = path.read_text()
    assert "2:" not in text.splitlines()[1]
    back = load(path)
    assert np.array_equal(back.X, ds.X)
