import numpy as np
import pytest

from mvtsk.antecedent import (
    SPREAD_FLOOR,
    AntecedentBank,
    cluster_antecedents,
    log_memberships,
    membership,
)
from mvtsk.core import ValidationError


def reference_fcm(data, rules, fuzzifier=2.0, max_iters=200, tol=1e-6):
    """Textbook fuzzy c-means written with explicit loops.

    Same quantile initialisation and stopping rule as the package, but an
    independent implementation of the membership and center updates.
    """

    def memberships(centers):
        d2 = ((data[:, None, :] - centers[None]) ** 2).sum(axis=2)
        u = np.zeros_like(d2)
        for n in range(len(data)):
            zeros = [j for j in range(rules) if d2[n, j] == 0.0]
            if zeros:
                for j in zeros:
                    u[n, j] = 1.0 / len(zeros)
                continue
            for j in range(rules):
                u[n, j] = 1.0 / sum(
                    (d2[n, j] / d2[n, l]) ** (1.0 / (fuzzifier - 1.0))
                    for l in range(rules)
                )
        return u

    probs = (np.arange(rules) + 1.0) / (rules + 1.0)
    centers = np.quantile(data, probs, axis=0)
    for _ in range(max_iters):
        um = memberships(centers) ** fuzzifier
        new = (um.T @ data) / um.sum(axis=0)[:, None]
        shift = np.max(np.abs(new - centers))
        centers = new
        if shift < tol:
            break
    sq = (data[:, None, :] - centers[None]) ** 2
    um = memberships(centers) ** fuzzifier
    var = np.einsum("nk,nkd->kd", um, sq) / um.sum(axis=0)[:, None]
    return centers, np.sqrt(var)


class TestClustering:
    def test_two_line_clusters_match_reference(self):
        # {0,1} and {9,10} with two rules: centers settle near 0.5 / 9.5
        data = np.array([[0.0], [1.0], [9.0], [10.0]])
        bank = cluster_antecedents(data, rules=2)
        ref_centers, ref_spreads = reference_fcm(data, rules=2)
        assert np.allclose(bank.centers, ref_centers, atol=1e-9)
        assert np.allclose(bank.spreads, ref_spreads, atol=1e-9)
        assert np.allclose(
            bank.centers.ravel(), [0.49974016, 9.50025984], atol=1e-6
        )
        assert np.allclose(
            bank.spreads.ravel(), [0.50077568, 0.50077568], atol=1e-6
        )

    def test_random_blobs_match_reference(self):
        rng = np.random.default_rng(5)
        data = np.vstack(
            [
                rng.normal(loc=(-2.0, 0.0), scale=0.4, size=(30, 2)),
                rng.normal(loc=(2.0, 1.0), scale=0.4, size=(30, 2)),
                rng.normal(loc=(0.0, -2.0), scale=0.4, size=(30, 2)),
            ]
        )
        bank = cluster_antecedents(data, rules=3)
        ref_centers, ref_spreads = reference_fcm(data, rules=3)
        assert np.allclose(bank.centers, ref_centers, atol=1e-8)
        assert np.allclose(bank.spreads, ref_spreads, atol=1e-8)

    def test_deterministic(self):
        rng = np.random.default_rng(9)
        data = rng.normal(size=(40, 3))
        a = cluster_antecedents(data, rules=4)
        b = cluster_antecedents(data, rules=4)
        assert np.array_equal(a.centers, b.centers)
        assert np.array_equal(a.spreads, b.spreads)

    def test_spread_scale_multiplies(self):
        rng = np.random.default_rng(2)
        data = rng.normal(size=(30, 2))
        narrow = cluster_antecedents(data, rules=2, spread_scale=1.0)
        wide = cluster_antecedents(data, rules=2, spread_scale=2.0)
        assert np.array_equal(narrow.centers, wide.centers)
        assert np.allclose(wide.spreads, 2.0 * narrow.spreads, rtol=1e-12)

    def test_identical_points_clamp_with_warning(self):
        data = np.full((5, 2), 3.0)
        with pytest.warns(RuntimeWarning, match="spread"):
            bank = cluster_antecedents(data, rules=2)
        assert np.allclose(bank.centers, 3.0)
        assert np.all(bank.spreads == SPREAD_FLOOR)

    def test_sample_on_initial_center_is_fine(self):
        # the 1/3 quantile of 4 points sits exactly on a data point, which
        # exercises the coincident-center membership path
        data = np.array([[0.0], [1.0], [9.0], [10.0]])
        bank = cluster_antecedents(data, rules=2)
        assert np.all(np.isfinite(bank.centers))
        assert np.all(np.isfinite(bank.spreads))

    def test_too_few_samples(self):
        with pytest.raises(ValidationError, match="at least"):
            cluster_antecedents(np.zeros((2, 1)), rules=3)

    def test_rejects_nan(self):
        with pytest.raises(ValidationError):
            cluster_antecedents(np.array([[np.nan], [1.0], [2.0]]), rules=2)

    def test_rejects_bad_fuzzifier(self):
        with pytest.raises(ValidationError, match="fuzzifier"):
            cluster_antecedents(np.zeros((5, 1)), rules=2, fuzzifier=1.0)


class TestMembership:
    def test_peak_at_center(self):
        bank = AntecedentBank(
            centers=np.array([[1.0, -1.0]]), spreads=np.array([[0.5, 2.0]])
        )
        assert membership(np.array([1.0, -1.0]), bank, 0) == pytest.approx(1.0)

    def test_product_over_dimensions(self):
        rng = np.random.default_rng(4)
        centers = rng.normal(size=(3, 4))
        spreads = rng.uniform(0.5, 2.0, size=(3, 4))
        bank = AntecedentBank(centers=centers, spreads=spreads)
        x = rng.normal(size=4)
        for rule in range(3):
            per_dim = np.exp(
                -((x - centers[rule]) ** 2) / (2.0 * spreads[rule] ** 2)
            )
            assert membership(x, bank, rule) == pytest.approx(
                float(np.prod(per_dim)), rel=1e-12
            )

    def test_dimension_mismatch(self):
        bank = AntecedentBank(centers=np.zeros((2, 3)), spreads=np.ones((2, 3)))
        with pytest.raises(ValidationError):
            membership(np.zeros(2), bank, 0)

    def test_bad_rule_index(self):
        bank = AntecedentBank(centers=np.zeros((2, 1)), spreads=np.ones((2, 1)))
        with pytest.raises(ValidationError):
            membership(np.zeros(1), bank, 2)

    def test_log_memberships_match_direct(self):
        rng = np.random.default_rng(8)
        bank = AntecedentBank(
            centers=rng.normal(size=(2, 3)),
            spreads=rng.uniform(0.5, 1.5, size=(2, 3)),
        )
        data = rng.normal(size=(10, 3))
        logs = log_memberships(data, bank)
        for n in range(10):
            for k in range(2):
                assert np.exp(logs[n, k]) == pytest.approx(
                    membership(data[n], bank, k), rel=1e-12
                )


class TestBankValidation:
    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            AntecedentBank(centers=np.zeros((2, 2)), spreads=np.ones((3, 2)))

    def test_nonpositive_spread(self):
        with pytest.raises(ValidationError):
            AntecedentBank(centers=np.zeros((1, 1)), spreads=np.zeros((1, 1)))
