import logging

import numpy as np
import pytest

from conftest import RBF_SIM, make_instance

from dpplearn import (
    GroundSetInstance,
    ModelParams,
    ParameterError,
    SimilarityConfig,
    TrainConfig,
    total_objective,
    train,
)


def small_dataset(rng, n_instances=12):
    return [make_instance(rng, n=5, label_size=2) for _ in range(n_instances)]


class TestTrainConfigValidation:
    def test_rejects_bad_values(self):
        with pytest.raises(ParameterError):
            TrainConfig(lam=-1.0)
        with pytest.raises(ParameterError):
            TrainConfig(omega=0.0)
        with pytest.raises(ParameterError):
            TrainConfig(step_size=0.0)
        with pytest.raises(ParameterError):
            TrainConfig(step_decay="linear")
        with pytest.raises(ParameterError):
            TrainConfig(max_outer_iterations=0)


class TestTrain:
    def test_objective_decreases_and_is_finite(self, rng):
        data = small_dataset(rng)
        config = TrainConfig(similarity=RBF_SIM, lam=1.0, max_outer_iterations=20)
        result = train(data, config)
        trace = np.array(result.objective_trace)
        assert np.all(np.isfinite(trace))
        assert trace[-1] < trace[0]
        assert result.iterations_used == len(trace)

    def test_final_objective_matches_total_objective_at_lambda_zero(self, rng):
        data = small_dataset(rng)
        config = TrainConfig(similarity=RBF_SIM, lam=0.0, max_outer_iterations=15,
                             rel_tolerance=1e-12)
        result = train(data, config)
        recomputed = total_objective(result.params, data, config)
        assert result.objective_trace[-1] == pytest.approx(recomputed, rel=1e-10)

    def test_weights_stay_on_simplex(self, rng):
        data = small_dataset(rng)
        config = TrainConfig(similarity=RBF_SIM, lam=2.0, max_outer_iterations=25)
        result = train(data, config)
        w = result.params.kernel_weights
        assert w.min() >= 0.0
        assert abs(w.sum() - 1.0) <= 1e-12

    def test_satisfied_margin_leaves_params_fixed(self, rng):
        # single confident item: the hinge bracket is negative from the start
        x = np.array([[1.0, 0.5]])
        inst = GroundSetInstance(x, x, label=(0,))
        sim = SimilarityConfig(bandwidths=(1.0,), include_linear=False)
        config = TrainConfig(similarity=sim, lam=1.0, max_outer_iterations=3)
        initial = ModelParams(np.array([2.0, 1.0]), np.ones(1))
        result = train([inst], config, initial=initial)
        assert np.array_equal(result.params.theta, initial.theta)
        assert result.objective_trace[-1] == 0.0

    def test_convergence_flag_on_flat_objective(self, rng):
        x = np.array([[1.0, 0.5]])
        inst = GroundSetInstance(x, x, label=(0,))
        sim = SimilarityConfig(bandwidths=(1.0,), include_linear=False)
        config = TrainConfig(similarity=sim, lam=1.0, max_outer_iterations=50)
        result = train([inst], config, initial=ModelParams(np.array([2.0, 1.0]),
                                                           np.ones(1)))
        assert result.converged
        assert result.iterations_used < 50

    def test_rejects_empty_or_unlabeled(self, rng):
        with pytest.raises(ParameterError):
            train([], TrainConfig(similarity=RBF_SIM))
        inst = make_instance(rng)
        unlabeled = GroundSetInstance(inst.quality_features,
                                      inst.similarity_features)
        with pytest.raises(ParameterError):
            train([unlabeled], TrainConfig(similarity=RBF_SIM))

    def test_initial_weights_length_checked(self, rng):
        data = small_dataset(rng)
        bad = ModelParams(np.zeros(3), np.array([0.5, 0.5]))
        with pytest.raises(ParameterError):
            train(data, TrainConfig(similarity=RBF_SIM), initial=bad)

    def test_singular_label_warns_and_survives(self, rng, caplog):
        phi = np.vstack([np.ones(3), np.ones(3), rng.standard_normal(3)])
        x = 0.1 * rng.standard_normal((3, 2))
        inst = GroundSetInstance(x, phi, label=(0, 1))
        sim = SimilarityConfig(bandwidths=(1.0,), include_linear=False)
        config = TrainConfig(similarity=sim, lam=1.0, max_outer_iterations=5)
        with caplog.at_level(logging.WARNING, logger="dpplearn.learning"):
            result = train([inst], config)
        assert any("singular" in rec.message for rec in caplog.records)
        assert np.all(np.isfinite(result.objective_trace))

    def test_mle_improves_test_fscore_on_synthetic_data(self):
        from dpplearn import SynthConfig, TRUE_SIMILARITY, generate_dataset
        from dpplearn.harness import evaluate_params
        from dpplearn.inference import InferenceConfig
        from dpplearn.kernel import uniform_params

        ds = generate_dataset(SynthConfig(n_train=60, n_holdout=5, n_test=40,
                                          seed=77))
        config = TrainConfig(similarity=TRUE_SIMILARITY, lam=0.0,
                             max_outer_iterations=25)
        inference = InferenceConfig()
        before = evaluate_params(
            ds.test, uniform_params(5, TRUE_SIMILARITY), TRUE_SIMILARITY,
            inference,
        )[2]
        result = train(list(ds.train), config)
        after = evaluate_params(ds.test, result.params, TRUE_SIMILARITY,
                                inference)[2]
        assert after > before

    def test_l2_penalty_shrinks_theta(self, rng):
        data = small_dataset(rng)
        base = TrainConfig(similarity=RBF_SIM, lam=0.0, max_outer_iterations=20)
        ridge = TrainConfig(similarity=RBF_SIM, lam=0.0, max_outer_iterations=20,
                            l2_theta=50.0)
        free = train(data, base).params.theta
        shrunk = train(data, ridge).params.theta
        assert np.linalg.norm(shrunk) < np.linalg.norm(free)
