"""
VAE: gradientes de la pérdida, determinismo del entrenamiento y persistencia.
"""

import numpy as np
import pytest
import torch
from torch.func import functional_call

from latentroute.engine.autoencoder import (
    DTYPE,
    build_network,
    decode,
    encode,
    kl_divergence,
    kl_weight_at,
    load_model,
    loss,
    loss_terms,
    reconstruction_error,
    save_model,
    train,
)
from latentroute.errors import ArchitectureMismatchError, CorruptArtifactError, DomainError, InputError
from latentroute.schemas.dataset import FLAG_INDEX
from latentroute.schemas.training import ModelArchitecture, TrainConfig


# ===== PÉRDIDA =====

def test_loss_gradient_matches_finite_differences():
    network = build_network(ModelArchitecture(hidden_sizes=[4, 3]), seed=0)
    names = [name for name, _ in network.named_parameters()]
    params = tuple(p.detach().clone().requires_grad_(True) for _, p in network.named_parameters())
    generator = torch.Generator().manual_seed(0)
    batch = torch.rand(5, 18, generator=generator, dtype=DTYPE)
    noise = torch.randn(5, 2, generator=generator, dtype=DTYPE)

    def objective(*values):
        x_hat, mean, logvar = functional_call(network, dict(zip(names, values)), (batch, noise))
        return reconstruction_error(batch, x_hat) + 0.5 * kl_divergence(mean, logvar)

    assert torch.autograd.gradcheck(objective, params, eps=1e-6, atol=1e-8, rtol=1e-4)


def test_loss_terms_add_up():
    network = build_network(ModelArchitecture(hidden_sizes=[8]), seed=1)
    batch = torch.rand(6, 18, generator=torch.Generator().manual_seed(1), dtype=DTYPE)
    total, recon, kl = loss_terms(network, batch, kl_weight=0.25)
    assert float(total) == pytest.approx(float(recon) + 0.25 * float(kl), abs=1e-12)
    assert float(recon) >= 0.0 and float(kl) >= 0.0


def test_kl_of_standard_normal_is_zero():
    zeros = torch.zeros(4, 2, dtype=DTYPE)
    assert float(kl_divergence(zeros, zeros)) == 0.0


def test_kl_warmup():
    config = TrainConfig(epochs=10, kl_weight=1.0, kl_warmup_fraction=0.2)
    assert kl_weight_at(config, 0) == pytest.approx(0.5)
    assert kl_weight_at(config, 1) == pytest.approx(1.0)
    assert kl_weight_at(config, 7) == pytest.approx(1.0)
    assert kl_weight_at(config.model_copy(update={"kl_warmup_fraction": 0.0}), 0) == 1.0


# ===== ENTRENAMIENTO =====

def _same_weights(a, b):
    sa, sb = a.network.state_dict(), b.network.state_dict()
    return sa.keys() == sb.keys() and all(torch.equal(sa[k], sb[k]) for k in sa)


def test_training_is_deterministic(small_split, small_config, small_model):
    train_part, heldout = small_split
    again, report = train(train_part, small_config, heldout=heldout)
    assert _same_weights(again, small_model)
    assert len(report.epochs) == small_config.epochs
    assert report.train_samples == len(train_part)
    assert report.heldout_samples == len(heldout)
    assert 0.0 <= report.flag_accuracy <= 1.0


def test_different_seed_changes_weights(small_split, small_config, small_model):
    train_part, _ = small_split
    other, _ = train(train_part, small_config.model_copy(update={"seed": 6, "epochs": 1}))
    assert not _same_weights(other, small_model)


def test_training_needs_both_classes(small_split, small_config):
    train_part, _ = small_split
    safe_only = train_part.replace(samples=train_part.samples[train_part.flags == 0.0])
    with pytest.raises(DomainError):
        train(safe_only, small_config)


def test_training_needs_a_full_batch(small_split, small_config):
    train_part, _ = small_split
    with pytest.raises(DomainError):
        train(train_part, small_config.model_copy(update={"batch_size": len(train_part) + 1}))


@pytest.fixture(scope="module")
def longer_run(small_split, small_config):
    train_part, heldout = small_split
    model, report = train(train_part, small_config.model_copy(update={"epochs": 40}), heldout=heldout)
    return model, report, heldout


def test_loss_decreases_over_training(longer_run):
    _, report, _ = longer_run
    assert len(report.epochs) == 40
    assert report.epochs[-1].total < report.epochs[0].total
    assert report.epochs[-1].reconstruction < report.epochs[0].reconstruction


def test_reconstruction_beats_the_mean(longer_run):
    """decode(encode(x)) sobre datos retenidos: mejor que predecir la media normalizada"""
    model, report, heldout = longer_run
    x = model.normalize(heldout.samples)
    mean, _ = model.encode_batch(x)
    error = float(np.mean(np.sum((x - model.decode_batch(mean)) ** 2, axis=1)))
    assert error < float(np.mean(np.sum(x ** 2, axis=1)))
    assert error == pytest.approx(report.heldout_reconstruction, rel=1e-9)


def test_encode_decode_shapes(small_model, small_split):
    _, heldout = small_split
    x = small_model.normalize(heldout.samples[0])
    mean, logvar = encode(small_model, x)
    assert mean.shape == (2,) and logvar.shape == (2,)
    out = decode(small_model, mean)
    assert out.shape == (18,)
    assert 0.0 <= out[FLAG_INDEX] <= 1.0
    total, recon, kl = loss(small_model, small_model.normalize(heldout.samples))
    assert np.isfinite([total, recon, kl]).all()


def test_encode_rejects_bad_input(small_model):
    with pytest.raises(DomainError):
        encode(small_model, np.zeros(17))
    with pytest.raises(DomainError):
        encode(small_model, np.full(18, np.nan))


# ===== PERSISTENCIA =====

def test_save_and_load(small_model, small_split, tmp_path):
    path = tmp_path / "model.pt"
    save_model(small_model, path)
    loaded = load_model(path, ModelArchitecture(hidden_sizes=[16, 8]))
    assert _same_weights(loaded, small_model)
    _, heldout = small_split
    x = small_model.normalize(heldout.samples)
    assert np.array_equal(loaded.encode_batch(x)[0], small_model.encode_batch(x)[0])
    assert loaded.normalization == small_model.normalization


def test_load_with_other_architecture(small_model, tmp_path):
    path = tmp_path / "model.pt"
    save_model(small_model, path)
    with pytest.raises(ArchitectureMismatchError):
        load_model(path, ModelArchitecture(hidden_sizes=[32]))


def test_load_truncated_file(small_model, tmp_path):
    path = tmp_path / "model.pt"
    save_model(small_model, path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(CorruptArtifactError):
        load_model(path)


def test_load_missing_file(tmp_path):
    with pytest.raises(InputError):
        load_model(tmp_path / "nada.pt")
