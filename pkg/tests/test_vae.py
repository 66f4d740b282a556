import numpy as np
import pytest

from clid.classify import gradient_check
from clid.errors import DataError
from clid.features import Alphabet, encode_batch
from clid.unsup.vae import (
    LATENT,
    VaeConfig,
    encode,
    fit_vae,
    init_vae,
    kl_standard_normal,
    loss_and_grads,
    vae_encode,
)


@pytest.fixture(scope="module")
def fitted(small_synthetic):
    alpha = Alphabet.fit(small_synthetic.texts)
    seqs = encode_batch(small_synthetic.texts, alpha)
    return fit_vae(seqs, alpha.size, VaeConfig(epochs=6, seed=1)), seqs


def test_kl_closed_form():
    assert np.allclose(kl_standard_normal(np.zeros((1, 2)), np.zeros((1, 2))), 0)
    # (mu, logvar) = (1, 0) contributes 1/2 per dimension
    assert np.allclose(kl_standard_normal(np.ones((1, 2)), np.zeros((1, 2))), 1.0)


def test_zero_encoder_gives_standard_normal():
    p = init_vae(16, seed=0)
    for k in p:
        if k.startswith("enc"):
            p[k] = np.zeros_like(p[k])
    mu, logvar = encode(p, np.random.default_rng(0).random((3, 16)))
    assert np.all(mu == 0) and np.all(logvar == 0)
    _, _, _, kl = loss_and_grads(p, np.zeros((3, 16)), np.zeros((3, LATENT)), parts=True)
    assert kl == 0


def test_monitor_loss_decreases_over_first_epochs(fitted):
    model, _ = fitted
    trace = model.monitor_trace
    assert len(trace) == 7
    assert trace[5] < trace[0]


def test_encode_deterministic_and_two_dimensional(fitted):
    model, seqs = fitted
    z = model.encode(seqs[:5])
    assert z.shape == (5, 2)
    assert np.array_equal(z, model.encode(seqs[:5]))
    # single-row and batched matmuls may differ in the last bit
    assert np.allclose(vae_encode(model, seqs[3]), z[3], rtol=1e-12, atol=1e-14)
    with pytest.raises(DataError):
        model.encode(seqs[:, :100])


def test_vae_gradient_check(fitted):
    model, seqs = fitted
    assert gradient_check(model, seqs[:4]) <= 1e-4


def test_too_few_sequences():
    with pytest.raises(DataError):
        fit_vae(np.zeros((10, 128), dtype=int), 5, VaeConfig(batch_size=64))
