import numpy as np
import pytest

from dpplearn import EnsembleKernel, GroundSetInstance, SimilarityConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


def make_kernel(rng, n, scale=1.0):
    from oracles import random_psd_matrix

    return EnsembleKernel.from_matrix(random_psd_matrix(rng, n, scale))


def make_instance(rng, n=6, d_q=3, d_s=3, label_size=3, feature_scale=0.6):
    x = feature_scale * rng.standard_normal((n, d_q))
    phi = rng.standard_normal((n, d_s))
    label = tuple(sorted(rng.choice(n, size=label_size, replace=False).tolist()))
    return GroundSetInstance(x, phi, label)


RBF_SIM = SimilarityConfig(bandwidths=(0.8, 2.0), include_linear=True)
