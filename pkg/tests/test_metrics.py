import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facetex import errors, metrics

import oracles


class TestAccuracy:
    def test_all_correct(self):
        assert metrics.accuracy([1, 0, 1], [1, 0, 1]) == 1.0

    def test_all_wrong(self):
        assert metrics.accuracy([1, 1], [0, 0]) == 0.0

    def test_three_of_four(self):
        assert metrics.accuracy([1, 0, 1, 1], [1, 0, 1, 0]) == 0.75

    def test_relates_to_rates(self):
        predicted = [1, 0, 1, 1, 0, 0]
        actual = [1, 1, 1, 0, 0, 0]
        fp = sum(p == 1 and a == 0 for p, a in zip(predicted, actual))
        fn = sum(p == 0 and a == 1 for p, a in zip(predicted, actual))
        assert metrics.accuracy(predicted, actual) == pytest.approx(
            1 - (fp + fn) / len(actual)
        )

    def test_length_mismatch(self):
        with pytest.raises(errors.ValidationError):
            metrics.accuracy([1], [1, 0])


class TestAuc:
    def test_perfect_separation(self):
        assert metrics.auc([-2, -1, 1, 2], [0, 0, 1, 1]) == 1.0

    def test_inverted(self):
        assert metrics.auc([-2, -1, 1, 2], [1, 1, 0, 0]) == 0.0

    def test_hand_case_three_quarters(self):
        assert metrics.auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75)

    def test_ties_half_credit(self):
        assert metrics.auc([0.5, 0.5], [0, 1]) == pytest.approx(0.5)

    def test_single_class_rejected(self):
        with pytest.raises(errors.ValidationError):
            metrics.auc([0.1, 0.2], [1, 1])

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(
            st.tuples(st.floats(-5, 5, allow_nan=False), st.integers(0, 1)),
            min_size=2,
            max_size=40,
        )
    )
    def test_matches_pair_counting_oracle(self, pairs):
        scores = [round(p[0], 2) for p in pairs]
        labels = [p[1] for p in pairs]
        if len(set(labels)) < 2:
            return
        assert metrics.auc(scores, labels) == pytest.approx(
            oracles.auc_by_pairs(scores, labels)
        )

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(0)
        scores = rng.normal(size=30)
        labels = rng.integers(0, 2, size=30)
        if len(set(labels.tolist())) < 2:
            labels[0], labels[1] = 0, 1
        base = metrics.auc(scores, labels)
        for transform in (lambda s: 3 * s + 7, np.tanh, lambda s: np.exp(s / 2)):
            assert metrics.auc(transform(scores), labels) == pytest.approx(base)


class TestRates:
    def test_perfect(self):
        assert metrics.rates([0, 1], [0, 1]) == (0.0, 0.0)

    def test_everything_flagged(self):
        fpr, fnr = metrics.rates([1, 1, 1, 1], [0, 0, 1, 1])
        assert (fpr, fnr) == (1.0, 0.0)

    def test_one_in_five(self):
        fpr, fnr = metrics.rates([1, 0, 0, 0, 0, 1], [0, 0, 0, 0, 0, 1])
        assert fpr == pytest.approx(0.2)
        assert fnr == 0.0

    def test_undefined_reported_absent(self):
        fpr, fnr = metrics.rates([0, 0], [0, 0])
        assert fpr == 0.0 and fnr is None


class TestConfusion:
    def test_perfect_diagonal(self):
        cm = metrics.attribution_confusion(
            ["DF", "F2F", "FSW"], ["DF", "F2F", "FSW"]
        )
        assert np.array_equal(cm.counts, np.eye(3, dtype=int))
        for row in cm.row_percent:
            assert max(row) == 100.0

    def test_all_attributed_df(self):
        cm = metrics.attribution_confusion(
            ["DF", "F2F", "FSW"], ["DF", "DF", "DF"]
        )
        assert cm.counts[:, 0].tolist() == [1, 1, 1]
        for row in cm.row_percent:
            assert row[0] == 100.0

    def test_mixed_counts(self):
        true = ["DF", "DF", "DF", "F2F", "FSW", "FSW"]
        attr = ["DF", "DF", "F2F", "F2F", "FSW", "DF"]
        cm = metrics.attribution_confusion(true, attr)
        assert cm.counts[0].tolist() == [2, 1, 0]
        assert cm.counts[1].tolist() == [0, 1, 0]
        assert cm.counts[2].tolist() == [1, 0, 1]
        assert cm.row_percent[0] == pytest.approx((200 / 3, 100 / 3, 0.0))

    def test_undetected_skipped(self):
        cm = metrics.attribution_confusion(
            ["DF", "F2F"], ["DF", "F2F"], detected=[True, False]
        )
        assert cm.counts.sum() == 1
        assert cm.row_percent[1] is None

    def test_rows_sum_to_100(self):
        rng = np.random.default_rng(1)
        techs = ["DF", "F2F", "FSW"]
        true = [techs[i] for i in rng.integers(0, 3, 60)]
        attr = [techs[i] for i in rng.integers(0, 3, 60)]
        cm = metrics.attribution_confusion(true, attr)
        for i, row in enumerate(cm.row_percent):
            if row is not None:
                assert sum(row) == pytest.approx(100.0, abs=0.01)
                assert cm.counts[i].sum() > 0


class TestSvg:
    def test_writes_valid_svg(self, tmp_path):
        path = tmp_path / "chart.svg"
        metrics.svg_bar_chart(
            path,
            ["DF", "F2F", "FSW"],
            {"accuracy": [0.93, 0.82, 0.93], "auc": [0.98, 0.88, 0.98]},
            title="per-technique accuracy",
            y_max=1.0,
        )
        text = path.read_text()
        assert text.startswith("<svg")
        assert text.count("<rect") >= 6
