import numpy as np
import pytest

from dpplearn import (
    ParameterError,
    SynthConfig,
    TRUE_SIMILARITY,
    generate_dataset,
    misspecified_similarity,
    true_params,
)
from dpplearn.batch import build_L_stack, map_exhaustive_stack, stack_instances


SMALL = SynthConfig(n_train=20, n_holdout=8, n_test=8, seed=42)


class TestGenerateDataset:
    def test_split_sizes_and_labels(self):
        ds = generate_dataset(SMALL)
        assert (len(ds.train), len(ds.holdout), len(ds.test)) == (20, 8, 8)
        for split in ds.splits.values():
            for inst in split:
                assert inst.label is not None
                assert inst.n_items == 10
                assert all(0 <= i < 10 for i in inst.label)

    def test_deterministic_given_seed(self):
        a, b = generate_dataset(SMALL), generate_dataset(SMALL)
        assert np.array_equal(a.true_theta, b.true_theta)
        for split in ("train", "holdout", "test"):
            for x, y in zip(getattr(a, split), getattr(b, split)):
                assert np.array_equal(x.quality_features, y.quality_features)
                assert x.label == y.label
        c = generate_dataset(SynthConfig(n_train=20, n_holdout=8, n_test=8, seed=43))
        assert not np.array_equal(a.true_theta, c.true_theta)

    def test_no_noise_labels_equal_provenance(self):
        cfg = SynthConfig(n_train=15, n_holdout=5, n_test=5, seed=7, noise_prob=0.0)
        ds = generate_dataset(cfg)
        for split, insts in ds.splits.items():
            for inst, clean in zip(insts, ds.provenance[split]):
                assert inst.label == clean

    def test_provenance_is_the_exhaustive_map(self):
        cfg = SynthConfig(n_train=6, n_holdout=2, n_test=2, seed=3, noise_prob=0.0)
        ds = generate_dataset(cfg)
        params = true_params(ds)
        batch = stack_instances(list(ds.train), TRUE_SIMILARITY)[0]
        _, L = build_L_stack(batch, params.theta, params.kernel_weights)
        assert list(map_exhaustive_stack(L)) == [i.label for i in ds.train]

    def test_true_L_is_psd(self):
        ds = generate_dataset(SMALL)
        params = true_params(ds)
        batch = stack_instances(list(ds.train), TRUE_SIMILARITY)[0]
        _, L = build_L_stack(batch, params.theta, params.kernel_weights)
        eigs = np.linalg.eigvalsh(L)
        assert eigs.min() >= -1e-9 * max(1.0, eigs.max())

    def test_mean_label_size_in_paper_band(self):
        cfg = SynthConfig(n_train=800, n_holdout=100, n_test=100, seed=1)
        ds = generate_dataset(cfg)
        sizes = [
            len(inst.label)
            for split in ds.splits.values()
            for inst in split
        ]
        assert len(sizes) == 1000
        assert 4.0 <= np.mean(sizes) <= 6.0

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            SynthConfig(noise_prob=1.5)
        with pytest.raises(ParameterError):
            SynthConfig(n_train=0)
        with pytest.raises(ParameterError):
            SynthConfig(n_items=21)


class TestMisspecifiedSimilarity:
    def test_unit_diagonal(self):
        ds = generate_dataset(SMALL)
        S = misspecified_similarity(ds.train[0], 2.0)
        assert np.allclose(np.diag(S), 1.0)
        assert np.array_equal(S, S.T)

    def test_huge_bandwidth_saturates(self):
        ds = generate_dataset(SMALL)
        S = misspecified_similarity(ds.train[0], 1e6)
        assert S.min() > 0.999999

    def test_known_value(self):
        from dpplearn import GroundSetInstance

        inst = GroundSetInstance(np.zeros((2, 1)),
                                 np.array([[0.0], [1.0]]))
        S = misspecified_similarity(inst, 1.0)
        assert S[0, 1] == pytest.approx(np.exp(-1.0), abs=1e-12)

    def test_equals_single_rbf_config(self):
        from dpplearn import SimilarityConfig, build_similarity_matrix

        ds = generate_dataset(SMALL)
        inst = ds.train[3]
        sigma = 1.7
        cfg = SimilarityConfig(bandwidths=(sigma,), include_linear=False)
        direct = misspecified_similarity(inst, sigma)
        via_config = build_similarity_matrix(inst, cfg, [1.0])
        assert np.max(np.abs(direct - via_config)) < 1e-12

    def test_rejects_bad_sigma(self):
        ds = generate_dataset(SMALL)
        with pytest.raises(ParameterError):
            misspecified_similarity(ds.train[0], 0.0)
