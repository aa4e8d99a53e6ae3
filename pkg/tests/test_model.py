import numpy as np
import pytest

from lindpinn import autodiff as ad
from lindpinn.errors import CheckpointCorrupt
from lindpinn.model import (
    FourierConfig,
    GammaConfig,
    NetworkConfig,
    PinnModel,
    fourier_embed,
    fourier_frequencies,
    softplus_inv,
)


def make(out_dim=3, fourier=None, kind="constant", seed=0, **kw):
    channels = ("AD", "PD") if out_dim == 3 else ("AD1", "PD1", "AD2", "PD2")
    return PinnModel(
        NetworkConfig(out_dim=out_dim, fourier=fourier, seed=seed, **kw),
        GammaConfig(channels=channels, kind=kind),
    )


def test_fourier_embed_examples():
    b = fourier_frequencies(5, 1.0, seed=3)
    out = fourier_embed(np.zeros((1, 1)), b).value
    assert out.shape == (1, 10)
    np.testing.assert_array_equal(out[0, :5], 0.0)
    np.testing.assert_array_equal(out[0, 5:], 1.0)


def test_fourier_tangent_matches_fd(rng):
    b = fourier_frequencies(4, 1.0, seed=1)
    t = rng.uniform(0, 5, size=(6, 1))
    h = 1e-5
    out = fourier_embed(ad.Tensor(t, tangent=np.ones_like(t)), b)
    fd = (fourier_embed(t + h, b).value - fourier_embed(t - h, b).value) / (2 * h)
    np.testing.assert_allclose(out.tangent.value, fd, rtol=1e-6, atol=1e-8)
    analytic = np.concatenate(
        [2 * np.pi * b * np.cos(2 * np.pi * b * t), -2 * np.pi * b * np.sin(2 * np.pi * b * t)], axis=1
    )
    np.testing.assert_allclose(out.tangent.value, analytic, atol=1e-12)


@pytest.mark.parametrize("out_dim, fourier", [(3, None), (15, None), (15, FourierConfig(16, 1.0))])
def test_forward_shape_bound_and_determinism(out_dim, fourier):
    t = np.linspace(0, 5, 41)
    a = make(out_dim, fourier, seed=4).predict(t)
    b = make(out_dim, fourier, seed=4).predict(t)
    assert a.shape == (41, out_dim)
    assert np.all(np.isfinite(a)) and np.all(np.abs(a) < 1)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, make(out_dim, fourier, seed=5).predict(t))


@pytest.mark.parametrize("fourier", [None, FourierConfig(8, 1.0)])
def test_forward_tangent_matches_fd(fourier, rng):
    m = make(15, fourier, seed=2)
    t = rng.uniform(0, 5, size=100)
    h = 1e-5
    _, dt = m.predict(t, with_tangent=True)
    fd = (m.predict(t + h) - m.predict(t - h)) / (2 * h)
    np.testing.assert_allclose(dt, fd, rtol=1e-5, atol=1e-7)


def test_residual_identity_with_zero_blocks():
    m = make(3, seed=1, output_tanh=False)
    for name in m.params:
        if name.startswith("block"):
            m.params[name] = np.zeros_like(m.params[name])
    t = np.linspace(0, 5, 7)[:, None]
    x = t * (2 / 5) - 1
    p = m.params
    expected = (x @ p["in.w"] + p["in.b"]) @ p["out.w"] + p["out.b"]
    np.testing.assert_allclose(m.predict(t), expected, atol=1e-14)


def test_init_params():
    m = make(15, seed=9)
    n = make(15, seed=9)
    for k in m.params:
        np.testing.assert_array_equal(m.params[k], n.params[k])
        if k.endswith(".b") or k.endswith(".b1") or k.endswith(".b2"):
            assert np.all(m.params[k] == 0)
    w = m.params["block0.w1"]
    assert np.abs(w).max() <= np.sqrt(1 / 64)
    np.testing.assert_allclose(m.rates([0.0, 2.5]), 0.1, atol=1e-15)


def test_time_varying_gamma_starts_flat():
    m = make(3, kind="time_varying")
    r = m.rates(np.linspace(0, 5, 11))
    assert r.shape == (11, 2)
    np.testing.assert_allclose(r, 0.1, atol=1e-15)


def test_softplus_examples():
    m = make(3)
    for raw, expected in [(0.0, np.log(2.0)), (10.0, 10.0 + np.log1p(np.exp(-10.0)))]:
        m.params["gamma.raw"] = np.full(2, raw)
        np.testing.assert_allclose(m.rates([0.0])[0], expected, rtol=1e-15)
    m.params["gamma.raw"] = np.full(2, -20.0)
    r = m.rates([0.0])[0]
    assert np.all(r > 0) and np.all(r < 1e-8)
    assert abs(softplus_inv(0.1) - np.log(np.expm1(0.1))) == 0


def test_gamma_nonnegative_everywhere(rng):
    m = make(3, kind="time_varying")
    for name in m.params:
        if name.startswith("gamma."):
            m.params[name] = rng.normal(scale=3.0, size=m.params[name].shape)
    assert np.all(m.rates(np.linspace(-5, 10, 301)) >= 0)


def test_checkpoint_roundtrip(tmp_path, rng):
    m = make(15, FourierConfig(16, 1.0), kind="constant", seed=3)
    m.set_flat(m.flat() + rng.normal(scale=0.01, size=m.n_params()))
    path = m.save(tmp_path / "ck.json", extra={"preset": "case3"})
    loaded, extra = PinnModel.load(path)
    assert extra == {"preset": "case3"}
    t = np.linspace(0, 5, 51)
    assert np.max(np.abs(loaded.predict(t) - m.predict(t))) <= 1e-12
    np.testing.assert_array_equal(loaded.flat(), m.flat())


def test_checkpoint_corrupt(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(CheckpointCorrupt):
        PinnModel.load(bad)
    m = make(3)
    d = m.to_dict()
    d["params"] = d["params"][:-1]
    with pytest.raises(CheckpointCorrupt):
        PinnModel.from_dict(d)
