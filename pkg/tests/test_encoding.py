import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qubo_svm.datasets import SvmDataset, load_dataset
from qubo_svm.encoding import (
    build_qubo,
    constraint_residual,
    decode_alpha,
    encode_alpha,
    make_encoding,
    model_from_alpha,
    predict,
    predict_many,
    recover_bias,
    train,
)
from qubo_svm.errors import ConstraintUnsatisfied, NoSupportVectors, ValidationError
from qubo_svm.qubo import brute_force_solve, energy
from qubo_svm.tabu import TabuConfig

from conftest import all_assignments, random_dataset


def direct_energy(data, c, k, lam, z):
    """-1^T P z + z^T P^T (1/2 (yy^T * K) + lam yy^T) P z, with P = I_N (x) p^T built explicitly."""
    p = np.array([c * 2 ** (j - 1) / (2**k - 1) for j in range(1, k + 1)])
    P = np.kron(np.eye(data.n), p[None, :])
    K = np.array([[float(np.dot(a, b)) for b in data.x] for a in data.x])
    yy = np.outer(data.y, data.y)
    alpha = P @ np.asarray(z, dtype=float)
    return -np.ones(data.n) @ alpha + alpha @ (0.5 * yy * K + lam * yy) @ alpha


def binary_svm_energy(data, c, lam, z):
    """The one-bit formulation written directly: -1^T z + C z^T (1/2 (yy^T * K) + lam yy^T) z."""
    K = data.x @ data.x.T
    yy = np.outer(data.y, data.y)
    z = np.asarray(z, dtype=float)
    return -z.sum() + c * z @ (0.5 * yy * K + lam * yy) @ z


class TestEncoding:
    def test_one_bit(self):
        enc = make_encoding(1, 4.0)
        assert enc.p.tolist() == [4.0]
        assert decode_alpha(enc, [0, 1, 1]).tolist() == [0.0, 4.0, 4.0]

    def test_three_bits_integers(self):
        enc = make_encoding(3, 7.0)
        assert enc.p.tolist() == [1.0, 2.0, 4.0]
        values = sorted({float(decode_alpha(enc, encode_alpha(enc, [v]))[0]) for v in range(8)})
        assert values == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]

    def test_two_bits_thirds(self):
        enc = make_encoding(2, 1.0)
        np.testing.assert_allclose(enc.p, [1 / 3, 2 / 3], rtol=1e-15)

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 7])
    @pytest.mark.parametrize("c", [2.0**-6, 0.3, 1.0, 7.0, 16.0])
    def test_invariants(self, k, c):
        enc = make_encoding(k, c)
        assert enc.p.sum() == pytest.approx(c, rel=1e-12)
        assert np.all(enc.p > 0) and np.all(np.diff(enc.p) > 0)
        full = decode_alpha(enc, np.ones(3 * k, dtype=int))
        assert full.tolist() == [c] * 3

    @pytest.mark.parametrize("k,c", [(0, 1.0), (-1, 1.0), (1, 0.0), (2, -1.0), (1.5, 1.0), (1, float("nan"))])
    def test_validation(self, k, c):
        with pytest.raises(ValidationError):
            make_encoding(k, c)


class TestDecode:
    def test_zeros(self):
        assert decode_alpha(make_encoding(2, 3.0), np.zeros(8, dtype=int)).tolist() == [0.0] * 4

    def test_ones(self):
        assert decode_alpha(make_encoding(3, 0.7), np.ones(12, dtype=int)).tolist() == [0.7] * 4

    def test_layout(self):
        alpha = decode_alpha(make_encoding(3, 7.0), [1, 0, 1, 0, 1, 0])
        assert alpha.tolist() == [5.0, 2.0]

    def test_length_mismatch(self):
        enc = make_encoding(3, 1.0)
        with pytest.raises(ValidationError):
            decode_alpha(enc, [1, 0, 1, 0])
        with pytest.raises(ValidationError):
            decode_alpha(enc, [1, 0, 1], n_points=2)

    @settings(max_examples=50, deadline=None)
    @given(k=st.integers(1, 5), c=st.floats(1e-3, 1e3), vs=st.lists(st.integers(0, 31), min_size=1, max_size=12))
    def test_encode_decode(self, k, c, vs):
        enc = make_encoding(k, c)
        v = np.array(vs) % (2**k)
        alpha = decode_alpha(enc, encode_alpha(enc, v))
        assert np.all(alpha >= 0) and np.all(alpha <= c)
        np.testing.assert_allclose(alpha, v * c / (2**k - 1), rtol=1e-15)
        assert np.all((alpha == c) == (v == 2**k - 1))


class TestResidual:
    def test_zero(self):
        data = random_dataset(4, 2, 0)
        assert constraint_residual(data, make_encoding(2, 1.0), np.zeros(8, dtype=int)) == 0

    def test_balanced_pair(self):
        data = SvmDataset([[1.0], [-1.0]], [1, -1])
        assert constraint_residual(data, make_encoding(1, 1.0), [1, 1]) == 0

    def test_two_bits(self):
        data = SvmDataset([[1.0], [-1.0]], [1, -1])
        assert constraint_residual(data, make_encoding(2, 1.0), [1, 0, 0, 1]) == -1

    def test_length_mismatch(self):
        data = SvmDataset([[1.0], [-1.0]], [1, -1])
        with pytest.raises(ValidationError):
            constraint_residual(data, make_encoding(2, 1.0), [1, 0, 0])

    def test_exact_for_tiny_step(self):
        # alpha^T y in floating point is not exactly zero here, the integer residual is
        data = SvmDataset(np.zeros((3, 1)) + [[1], [2], [3]], [1, 1, -1])
        enc = make_encoding(2, 0.1)
        z = encode_alpha(enc, [1, 2, 3])
        assert constraint_residual(data, enc, z) == 0


class TestBuildQubo:
    def test_zero_energy_at_origin(self):
        data = random_dataset(5, 3, 1)
        prob = build_qubo(data, make_encoding(2, 0.5), 1.0)
        assert prob.qubo.n == 10
        assert energy(prob.qubo, np.zeros(10, dtype=int)) == 0.0

    def test_two_point_hand_value(self):
        data = SvmDataset([[1.0], [-1.0]], [1, -1])
        prob = build_qubo(data, make_encoding(1, 1.0), 1.0)
        # yy^T * K is all ones, so alpha=(1,1) gives -2 + 1/2 * 4 and a zero penalty
        assert energy(prob.qubo, [1, 1]) == pytest.approx(0.0)
        assert energy(prob.qubo, [1, 1]) == pytest.approx(direct_energy(data, 1.0, 1, 1.0, [1, 1]))

    @pytest.mark.parametrize("seed", range(6))
    @pytest.mark.parametrize("k", [1, 2])
    def test_exhaustive_equivalence(self, seed, k):
        n = 6 if k == 1 else 4
        data = random_dataset(n, 3, seed)
        c, lam = [0.25, 1.0, 3.0][seed % 3], [1.0, 4.0][seed % 2]
        q = build_qubo(data, make_encoding(k, c), lam).qubo
        for z in all_assignments(n * k):
            assert energy(q, z) == pytest.approx(direct_energy(data, c, k, lam, z), rel=1e-9, abs=1e-12)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_penalty_soundness(self, k):
        data = random_dataset(4, 2, 3)
        c = 0.75
        enc = make_encoding(k, c)
        q1, q2 = build_qubo(data, enc, 1.0).qubo, build_qubo(data, enc, 2.0).qubo
        rng = np.random.default_rng(k)
        for _ in range(40):
            z = rng.integers(0, 2, 4 * k)
            r = constraint_residual(data, enc, z)
            penalty = energy(q2, z) - energy(q1, z)
            assert penalty == pytest.approx((c / (2**k - 1)) ** 2 * r**2, rel=1e-9, abs=1e-12)

    @pytest.mark.parametrize("seed", range(4))
    def test_one_bit_is_scaled_binary_formulation(self, seed):
        data = random_dataset(8, 2, seed)
        c, lam = 0.5 + seed, 2.0
        q = build_qubo(data, make_encoding(1, c), lam).qubo
        for z in all_assignments(8)[::5]:
            assert energy(q, z) == pytest.approx(c * binary_svm_energy(data, c, lam, z), rel=1e-9, abs=1e-12)

    def test_rejects_bad_lambda(self):
        data = random_dataset(3, 1, 0)
        with pytest.raises(ValidationError):
            build_qubo(data, make_encoding(1, 1.0), 0.0)


class TestDatasetValidation:
    def test_single_class(self):
        with pytest.raises(ValidationError):
            SvmDataset([[1.0], [2.0]], [1, 1])

    def test_bad_labels(self):
        with pytest.raises(ValidationError):
            SvmDataset([[1.0], [2.0]], [1, 0])

    def test_nan_features(self):
        with pytest.raises(ValidationError):
            SvmDataset([[np.nan], [2.0]], [1, -1])


class TestBias:
    def test_single_support_vector(self):
        data = SvmDataset([[1.0], [-1.0]], [1, -1])
        assert recover_bias(data, np.array([2.0]), np.array([1.0, 0.0]), 1.0) == 1.0

    def test_symmetric_pair(self):
        data = SvmDataset([[1.0], [-1.0]], [1, -1])
        assert recover_bias(data, np.array([1.0]), np.array([0.5, 0.5]), 1.0) == 0.0

    def test_prefers_interior(self):
        data = SvmDataset([[1.0], [-1.0], [3.0]], [1, -1, 1])
        # point 2 sits at the bound C and is ignored
        b = recover_bias(data, np.array([1.0]), np.array([0.5, 0.5, 1.0]), 1.0)
        assert b == pytest.approx(0.0)

    def test_no_support(self):
        data = SvmDataset([[1.0], [-1.0]], [1, -1])
        with pytest.raises(NoSupportVectors):
            recover_bias(data, np.zeros(1), np.zeros(2), 1.0)


class TestTrain:
    def test_toy_exact(self, toy):
        model = train(toy, make_encoding(1, 0.125), exact=True)
        assert not model.degenerate
        assert constraint_residual(toy, make_encoding(1, 0.125), model.assignment) == 0
        assert [predict(model, x) for x in toy.x] == toy.y.tolist()
        # independent recomputation of w and b
        w = sum(a * yi * xi for a, yi, xi in zip(model.alpha, toy.y, toy.x))
        support = [i for i in range(4) if model.alpha[i] > 0]
        b = np.mean([float(np.dot(w, toy.x[i])) - toy.y[i] for i in support])
        np.testing.assert_allclose(model.w, w, rtol=1e-12)
        assert model.b == pytest.approx(b, rel=1e-12)

    def test_toy_tabu_matches_exact(self, toy):
        for k in (1, 2, 3):
            enc = make_encoding(k, 0.125)
            a = train(toy, enc, exact=True)
            assert not a.degenerate
            b = train(toy, enc, TabuConfig(restarts=5, iterations_per_restart=200))
            np.testing.assert_array_equal(a.alpha, b.alpha)
            assert a.lambda_used == b.lambda_used

    def test_lambda_doubles_until_balanced(self):
        data = random_dataset(6, 2, 4)
        seen = []
        model = train(data, make_encoding(1, 0.125), exact=True, on_attempt=lambda p, r, res: seen.append((p.lam, res)))
        lams = [lam for lam, _ in seen]
        assert lams == [2.0**i for i in range(len(lams))]
        assert all(res != 0 for _, res in seen[:-1]) and seen[-1][1] == 0
        assert model.lambda_used == lams[-1]

    def test_every_model_is_balanced(self):
        for seed in range(10):
            data = random_dataset(5, 2, 50 + seed)
            enc = make_encoding(1 + seed % 2, [0.1, 1.0, 5.0][seed % 3])
            model = train(data, enc, exact=True)
            assert constraint_residual(data, enc, model.assignment) == 0
            assert np.all((model.alpha >= 0) & (model.alpha <= enc.c))
            assert np.array_equal(model.support_mask, model.alpha > 0)
            if not model.degenerate:
                np.testing.assert_allclose(model.w, (model.alpha * data.y) @ data.x)

    def test_unsatisfied_carries_residual(self):
        data = SvmDataset([[1.0], [2.0], [-1.0]], [1, 1, -1])
        with pytest.raises(ConstraintUnsatisfied) as info:
            train(data, make_encoding(1, 0.01), exact=True, max_doublings=0)
        assert info.value.residual != 0

    def test_degenerate_is_flagged_not_raised(self):
        # far-apart, large-norm points: the all-zero vector is the minimiser
        data = SvmDataset([[10.0, 10.0], [-10.0, -10.0]], [1, -1])
        model = train(data, make_encoding(1, 8.0), exact=True)
        assert model.degenerate and not model.support_mask.any()
        with pytest.raises(NoSupportVectors):
            predict(model, [0.0, 0.0])

    def test_iris_large_c_one_bit_degenerate(self):
        data = load_dataset("iris")
        model = train(data, make_encoding(1, 16.0), TabuConfig(restarts=10, iterations_per_restart=2000), runs=4)
        assert model.degenerate and model.lambda_used == 1.0

    def test_iris_large_c_zero_is_not_the_exact_minimum(self):
        # the all-zero vector the heuristic returns is beaten by a balanced close pair
        data = load_dataset("iris")
        enc = make_encoding(1, 16.0)
        q = build_qubo(data, enc, 1.0).qubo
        pos, neg = np.flatnonzero(data.y == 1), np.flatnonzero(data.y == -1)
        d2 = ((data.x[pos, None] - data.x[None, neg]) ** 2).sum(-1)
        i, j = np.unravel_index(np.argmin(d2), d2.shape)
        z = np.zeros(data.n, dtype=int)
        z[[pos[i], neg[j]]] = 1
        assert energy(q, z) < 0.0


class TestPredict:
    def _model(self, w, b):
        data = SvmDataset([[1.0], [-1.0]], [1, -1])
        m = model_from_alpha(data, np.array([0.5, 0.5]), 1.0, lambda_used=1.0)
        m.w, m.b = np.array(w, dtype=float), b
        return m

    def test_positive(self):
        assert predict(self._model([1.0], 0.0), [3.0]) == 1

    def test_negative(self):
        assert predict(self._model([1.0], 0.0), [-3.0]) == -1

    def test_zero_score_is_positive(self):
        assert predict(self._model([1.0], 2.0), [2.0]) == 1

    def test_many(self):
        assert predict_many(self._model([1.0], 0.5), [[0.0], [1.0], [0.5]]).tolist() == [-1, 1, 1]
