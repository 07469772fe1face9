import numpy as np
import pytest

from mvtsk.antecedent import AntecedentBank
from mvtsk.core import ValidationError, ViewDataset, one_hot_encode
from mvtsk.fuzzy_map import firing_strengths, map_dataset
from mvtsk.tsk import (
    ConsequentBlock,
    TskModel,
    decision_matrix,
    decision_values,
    fit_tsk,
    predict_class,
    ridge_consequents,
)


def random_model(rng, rules=3, dim=2, n_classes=2):
    bank = AntecedentBank(
        centers=rng.normal(size=(rules, dim)),
        spreads=rng.uniform(0.5, 2.0, size=(rules, dim)),
    )
    coeffs = rng.normal(size=(rules * (dim + 1), n_classes))
    return TskModel(bank=bank, consequents=ConsequentBlock(coeffs=coeffs, ridge=0.1))


class TestRidge:
    def test_matches_augmented_least_squares(self):
        # ridge solution == ordinary least squares on [G; sqrt(lam) I]
        rng = np.random.default_rng(0)
        mat = rng.normal(size=(20, 6))
        targets = rng.normal(size=(20, 2))
        lam = 0.37
        block = ridge_consequents(mat, targets, lam)
        aug = np.vstack([mat, np.sqrt(lam) * np.eye(6)])
        aug_t = np.vstack([targets, np.zeros((6, 2))])
        ref, *_ = np.linalg.lstsq(aug, aug_t, rcond=None)
        assert np.allclose(block.coeffs, ref, atol=1e-8)

    def test_zero_penalty_full_rank(self):
        rng = np.random.default_rng(1)
        mat = rng.normal(size=(30, 4))
        targets = rng.normal(size=(30, 3))
        block = ridge_consequents(mat, targets, 0.0)
        ref, *_ = np.linalg.lstsq(mat, targets, rcond=None)
        assert np.allclose(block.coeffs, ref, atol=1e-8)

    def test_singular_advises_penalty(self):
        mat = np.array([[1.0, 1.0], [1.0, 1.0]])
        targets = np.array([[1.0], [0.0]])
        with pytest.raises(np.linalg.LinAlgError, match="ridge penalty"):
            ridge_consequents(mat, targets, 0.0)

    def test_negative_penalty_rejected(self):
        with pytest.raises(ValidationError):
            ridge_consequents(np.eye(2), np.eye(2), -0.1)

    def test_empty_design_rejected(self):
        with pytest.raises(ValidationError):
            ridge_consequents(np.zeros((0, 2)), np.zeros((0, 1)), 1.0)

    def test_single_sample(self):
        block = ridge_consequents(np.array([[1.0]]), np.array([[2.0]]), 1.0)
        # (1 + 1) p = 2  =>  p = 1
        assert block.coeffs[0, 0] == pytest.approx(1.0)


class TestDecision:
    def test_rule_sum_equals_linear_form(self):
        # evaluating rule by rule must match the mapped linear evaluation
        rng = np.random.default_rng(2)
        for _ in range(20):
            rules = int(rng.integers(1, 5))
            dim = int(rng.integers(1, 6))
            n_classes = int(rng.integers(2, 4))
            model = random_model(rng, rules, dim, n_classes)
            x = rng.normal(size=dim)
            strengths = firing_strengths(x, model.bank)
            coeffs = model.consequents.coeffs
            expect = np.zeros(n_classes)
            for k in range(rules):
                # rule k holds an intercept and a slope per input dim
                block = coeffs[k * (dim + 1) : (k + 1) * (dim + 1)]
                rule_out = block[0] + x @ block[1:]
                expect += strengths[k] * rule_out
            got = decision_values(model, x)
            assert np.max(np.abs(got - expect)) < 1e-10

    def test_decision_matrix_stacks_rows(self):
        rng = np.random.default_rng(3)
        model = random_model(rng)
        data = rng.normal(size=(9, 2))
        mat = decision_matrix(model, data)
        for n in range(9):
            assert np.allclose(mat[n], decision_values(model, data[n]), atol=1e-12)


class TestPredictClass:
    def test_argmax(self):
        idx, onehot = predict_class(np.array([0.2, 0.9, 0.1]))
        assert idx == 1
        assert np.array_equal(onehot, [0.0, 1.0, 0.0])

    def test_tie_takes_lowest_index(self):
        idx, _ = predict_class(np.array([0.5, 0.5]))
        assert idx == 0

    def test_shift_invariance(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            scores = rng.normal(size=4)
            base, _ = predict_class(scores)
            shifted, _ = predict_class(scores + 17.3)
            assert base == shifted

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            predict_class(np.array([]))


class TestFitTsk:
    def test_separable_blobs(self):
        rng = np.random.default_rng(5)
        data = np.vstack(
            [
                rng.normal(loc=(-2.0, -2.0), scale=0.3, size=(40, 2)),
                rng.normal(loc=(2.0, 2.0), scale=0.3, size=(40, 2)),
            ]
        )
        labels = one_hot_encode([0] * 40 + [1] * 40, 2)
        view = ViewDataset(view_id=0, data=data, labels=labels)
        model = fit_tsk(view, rules=2, lam=0.1)
        scores = decision_matrix(model, data)
        predicted = np.argmax(scores, axis=1)
        assert np.mean(predicted == np.argmax(labels, axis=1)) > 0.95

    def test_requires_labels(self):
        view = ViewDataset(view_id=0, data=np.zeros((10, 2)))
        with pytest.raises(ValidationError, match="labels"):
            fit_tsk(view, rules=2, lam=0.1)

    def test_consequent_shape_checked(self):
        rng = np.random.default_rng(6)
        bank = AntecedentBank(
            centers=rng.normal(size=(2, 2)),
            spreads=np.ones((2, 2)),
        )
        with pytest.raises(ValidationError):
            TskModel(
                bank=bank,
                consequents=ConsequentBlock(coeffs=np.zeros((5, 2)), ridge=0.1),
            )
