import math

import numpy as np
import pytest
from sklearn.linear_model import LogisticRegression

from dementia_qml.data import (
    Dataset,
    SynthSpec,
    generate_synthetic,
    load_csv,
    make_separable,
    split,
    split_indices,
    truncated_location,
)
from dementia_qml.errors import DataLoadError

# 3-sigma bands at n = 166 around the target cohort moments
AGE_BAND = 1.8147718746907762  # 3 * 7.7939 / sqrt(166)
FEMALE_BAND = 0.09944423877986105  # 3 * sqrt(0.76 * 0.24 / 166)
SCHOOLING_BAND = 0.9026708229017222  # 3 * 3.8767 / sqrt(166)
CHRONIC_BAND = 0.30833355784209776  # 3 * 1.3242 / sqrt(166)


def test_bands_match_formula():
    assert AGE_BAND == pytest.approx(3 * 7.7939 / math.sqrt(166))
    assert FEMALE_BAND == pytest.approx(3 * math.sqrt(0.76 * 0.24 / 166))
    assert SCHOOLING_BAND == pytest.approx(3 * 3.8767 / math.sqrt(166))
    assert CHRONIC_BAND == pytest.approx(3 * 1.3242 / math.sqrt(166))


class TestDataset:
    def test_invariants(self):
        with pytest.raises(ValueError):
            Dataset([[1, 2]], [1, -1], ["a", "b"])
        with pytest.raises(ValueError):
            Dataset([[1, 2]], [1], ["a"])
        with pytest.raises(ValueError):
            Dataset([[1, 2]], [0], ["a", "b"])

    def test_read_only(self):
        d = Dataset([[1.0]], [1], ["a"])
        with pytest.raises(ValueError):
            d.X[0, 0] = 2

    def test_columns_and_rows(self):
        d = Dataset([[1, 2, 3], [4, 5, 6]], [1, -1], ["a", "b", "c"])
        c = d.columns([2, 0])
        assert c.feature_names == ("c", "a")
        np.testing.assert_array_equal(c.X, [[3, 1], [6, 4]])
        np.testing.assert_array_equal(d.rows([1]).y, [-1])


class TestLoadCsv:
    def test_label_mapping(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b,label\n1,2,1\n3,4,0\n5,6,1\n")
        d = load_csv(p, "label")
        np.testing.assert_array_equal(d.y, [1, -1, 1])
        assert d.feature_names == ("a", "b")

    def test_positive_token(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("dx,a\nyes,1\nno,2\n")
        np.testing.assert_array_equal(load_csv(p, "dx", positive_token="yes").y, [1, -1])

    def test_drops_empty_cell(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b,label\n1,2,1\n3,,0\n5,6,1\n")
        d = load_csv(p, "label")
        assert d.load_report.drop_count == 1
        assert d.load_report.dropped_lines == (3,)
        assert d.n_samples == 2

    def test_drops_non_numeric(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,label\nx,1\n2,0\n")
        assert load_csv(p, "label").load_report.drop_count == 1

    def test_header_only(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b,label\n")
        with pytest.raises(DataLoadError, match="no usable rows"):
            load_csv(p, "label")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataLoadError):
            load_csv(tmp_path / "nope.csv", "label")

    def test_missing_label_column(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(DataLoadError, match="label"):
            load_csv(p, "label")

    def test_round_trip(self, tmp_path):
        d = generate_synthetic(SynthSpec(n_samples=20, n_noise_features=3, seed=4))
        d.to_csv(tmp_path / "s.csv")
        back = load_csv(tmp_path / "s.csv", "label")
        np.testing.assert_array_equal(back.X, d.X)
        np.testing.assert_array_equal(back.y, d.y)
        assert back.feature_names == d.feature_names


class TestSplit:
    def test_stratified_arithmetic(self):
        y = np.array([1] * 5 + [-1] * 5)
        d = Dataset(np.arange(10.0).reshape(-1, 1), y, ["a"])
        train, test = split(d, 0.2, seed=0)
        assert sorted(test.y.tolist()) == [-1, 1]
        assert train.n_samples == 8

    def test_deterministic(self):
        y = np.tile([1, -1], 20)
        a = split_indices(y, 0.25, 7)
        b = split_indices(y, 0.25, 7)
        assert all(np.array_equal(p, q) for p, q in zip(a, b))

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1])
    def test_bad_fraction(self, fraction):
        with pytest.raises(ValueError):
            split_indices(np.tile([1, -1], 5), fraction, 0)

    def test_class_too_small(self):
        with pytest.raises(ValueError):
            split_indices(np.array([1, -1, -1, -1]), 0.5, 0)

    @pytest.mark.parametrize("seed", range(5))
    def test_partition_no_leakage(self, seed):
        y = np.where(np.random.default_rng(seed).random(50) < 0.3, 1, -1)
        train, test = split_indices(y, 0.3, seed)
        assert set(train).isdisjoint(test)
        assert sorted(np.concatenate([train, test]).tolist()) == list(range(50))


class TestSynthetic:
    @pytest.mark.parametrize("seed", range(5))
    def test_moments_in_bands(self, seed):
        d = generate_synthetic(SynthSpec(seed=seed))
        female, age, schooling, chronic = (d.X[:, i] for i in range(4))
        assert abs(age.mean() - 78.90) <= AGE_BAND
        assert abs(female.mean() - 0.76) <= FEMALE_BAND
        assert abs(schooling.mean() - 3.46) <= SCHOOLING_BAND
        assert abs(chronic.mean() - 2.96) <= CHRONIC_BAND

    def test_shape_and_names(self):
        d = generate_synthetic()
        assert d.X.shape == (166, 99)
        assert d.feature_names[:4] == ("female", "age", "schooling", "chronic_diseases")

    def test_truncation(self):
        d = generate_synthetic(SynthSpec(n_samples=2000, seed=1))
        assert d.X[:, 1].min() >= 65 and d.X[:, 1].max() <= 90
        assert d.X[:, 2].min() >= 0 and d.X[:, 3].min() >= 0
        assert np.all(d.X[:, 3] == np.rint(d.X[:, 3]))

    def test_deterministic(self):
        a = generate_synthetic(SynthSpec(seed=9))
        b = generate_synthetic(SynthSpec(seed=9))
        assert a.X.tobytes() == b.X.tobytes() and a.y.tobytes() == b.y.tobytes()

    def test_minimum_spec(self):
        d = generate_synthetic(SynthSpec(n_samples=4, seed=0))
        assert d.n_samples == 4 and set(d.y.tolist()) <= {-1, 1}

    @pytest.mark.parametrize("kwargs", [{"n_samples": 3}, {"fraction_female": 1.5}, {"age_sd": -1.0}])
    def test_invalid_spec(self, kwargs):
        with pytest.raises(ValueError):
            SynthSpec(**kwargs)

    def test_truncated_location_mean(self):
        from scipy import stats

        loc = truncated_location(3.46, 3.8767, 0.0, math.inf)
        a = (0.0 - loc) / 3.8767
        assert stats.truncnorm.mean(a, math.inf, loc=loc, scale=3.8767) == pytest.approx(3.46, abs=1e-9)

    def test_separability_dial(self):
        accs = []
        for scale in (0.3, 1.0, 3.0):
            coefs = (0.0, 1.5 * scale, -1.0 * scale, 1.0 * scale)
            d = generate_synthetic(SynthSpec(n_samples=3000, n_noise_features=0, coefficients=coefs, seed=2))
            Z = d.X[:, 1:4]
            clf = LogisticRegression().fit(Z, d.y)
            accs.append(clf.score(Z, d.y))
        assert accs[0] < accs[1] < accs[2]


class TestSeparable:
    @pytest.mark.parametrize("seed", range(5))
    def test_margin_survives_scaling(self, seed):
        from dementia_qml.preprocess import fit_scaler, transform
        from dementia_qml.svm import train_svm

        d = make_separable(seed=seed)
        assert d.n_samples == 40 and sorted(np.bincount((d.y + 1) // 2)) == [20, 20]
        scaled = transform(d.X, fit_scaler(d.X))
        m = train_svm(Dataset(scaled, d.y, d.feature_names), C=1e6)
        assert 2 / np.linalg.norm(m.w) >= 0.5

    def test_odd_count_rejected(self):
        with pytest.raises(ValueError):
            make_separable(n_samples=41)
