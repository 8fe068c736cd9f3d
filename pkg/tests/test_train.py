"""Loss composition, sampler, Adam, and gradient checking."""

import numpy as np
import pytest

from shufflesr import fourier, model, ops, tensor, train, weights
from shufflesr.errors import ConfigError


# ------------------------------------------------------------------ loss

def test_total_loss_zero_for_identical():
    x = np.random.default_rng(0).standard_normal((1, 3, 8, 8)).astype(np.float32)
    assert train.total_loss(x, x, 0.1) == 0.0


def test_total_loss_pixel_term_only():
    gt = np.zeros((1, 1, 4, 4), dtype=np.float32)
    sr = np.full_like(gt, 0.5)
    assert train.total_loss(sr, gt, 0.0) == pytest.approx(0.5, abs=1e-7)


def test_total_loss_composes_exactly():
    with tensor.use_precision("float64"):
        rng = np.random.default_rng(1)
        sr = rng.standard_normal((1, 2, 6, 6))
        gt = rng.standard_normal((1, 2, 6, 6))
        l1 = float(np.mean(np.abs(sr - gt)))
        freq = fourier.frequency_loss(sr, gt)
        assert train.total_loss(sr, gt, 0.1) == l1 + 0.1 * freq


def test_l1_subgradient_zero_at_optimum():
    x = np.random.default_rng(2).standard_normal((1, 1, 4, 4))
    gsr, ggt = ops.vjp("l1_loss", (x, x.copy()), 1.0)
    assert np.array_equal(gsr, np.zeros_like(x))
    assert np.array_equal(ggt, np.zeros_like(x))


# --------------------------------------------------------------- dataset

def test_make_dataset_crops_and_downscales():
    img = np.random.default_rng(3).uniform(0, 1, (3, 33, 50)).astype(np.float32)
    ds = train.make_dataset([img], scale=4)
    assert ds.hr[0].shape == (3, 32, 48)
    assert ds.lr[0].shape == (3, 8, 12)


def test_synthetic_images_deterministic_and_bounded():
    a = train.synthetic_images(3, 48, seed=9)
    b = train.synthetic_images(3, 48, seed=9)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
        assert x.min() >= 0.0 and x.max() <= 1.0 and x.shape == (3, 48, 48)


# --------------------------------------------------------------- sampler

def _coordinate_dataset(scale=2, lr_size=8):
    # channel 0 encodes the row index, channel 1 the column index
    hr_size = lr_size * scale
    hr = np.zeros((3, hr_size, hr_size), dtype=np.float32)
    hr[0] = np.arange(hr_size)[:, None]
    hr[1] = np.arange(hr_size)[None, :]
    lr = np.zeros((3, lr_size, lr_size), dtype=np.float32)
    lr[0] = np.arange(lr_size)[:, None]
    lr[1] = np.arange(lr_size)[None, :]
    return train.PairedDataset(scale=scale, hr=[hr], lr=[lr])


def test_sample_batch_alignment_on_untransformed_draws():
    ds = _coordinate_dataset()
    cfg = train.TrainConfig(batch=64, patch=4, scale=2)
    rng = np.random.Generator(np.random.PCG64(0))
    lr_b, hr_b, rng = train.sample_batch(ds, cfg, rng)
    rows = np.arange(4, dtype=np.float32)
    found = 0
    for b in range(64):
        i0, j0 = lr_b[b, 0, 0, 0], lr_b[b, 1, 0, 0]
        untransformed = (
            np.array_equal(lr_b[b, 0], (i0 + rows)[:, None] * np.ones(4)) and
            np.array_equal(lr_b[b, 1], (j0 + rows)[None, :] * np.ones(4)[:, None]))
        if untransformed:
            found += 1
            assert hr_b[b, 0, 0, 0] == 2 * i0  # HR origin = s * LR origin
            assert hr_b[b, 1, 0, 0] == 2 * j0
    assert found > 0


def test_sample_batch_deterministic():
    ds = train.make_dataset(train.synthetic_images(2, 32, seed=1), 2)
    cfg = train.TrainConfig(batch=4, patch=8, scale=2)
    a = train.sample_batch(ds, cfg, np.random.Generator(np.random.PCG64(5)))
    b = train.sample_batch(ds, cfg, np.random.Generator(np.random.PCG64(5)))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_sample_batch_augmentation_statistics():
    # full-image patches on an asymmetric image make each of the 8 transforms
    # identifiable; frequencies must match a fair sampler over 10k draws
    ds = _coordinate_dataset(scale=2, lr_size=6)
    cfg = train.TrainConfig(batch=100, patch=6, scale=2)
    base = ds.lr[0]
    variants = {}
    for flip in (False, True):
        for rot in range(4):
            key_arr, _ = train._transform_pair(base, ds.hr[0], flip, rot)
            variants[key_arr.tobytes()] = (flip, rot)
    assert len(variants) == 8
    rng = np.random.Generator(np.random.PCG64(123))
    flips = 0
    rots = np.zeros(4, dtype=int)
    draws = 0
    for _ in range(100):
        lr_b, _, rng = train.sample_batch(ds, cfg, rng)
        for b in range(cfg.batch):
            flip, rot = variants[lr_b[b].tobytes()]
            flips += flip
            rots[rot] += 1
            draws += 1
    assert draws == 10_000
    assert 0.47 <= flips / draws <= 0.53
    assert all(0.22 <= r / draws <= 0.28 for r in rots)


def test_sample_batch_patch_too_large():
    ds = train.make_dataset(train.synthetic_images(1, 16, seed=2), 2)
    cfg = train.TrainConfig(batch=1, patch=64, scale=2)
    with pytest.raises(ConfigError):
        train.sample_batch(ds, cfg, np.random.Generator(np.random.PCG64(0)))


# ------------------------------------------------------------------ adam

def test_adam_first_step_moves_by_lr_sign():
    tree = {"p": np.array([1.0, -2.0, 3.0])}
    grads = {"p": np.array([4.0, -1.5, 2.0])}
    cfg = train.TrainConfig(lr=1e-3)
    new, state = train.adam_step(tree, grads, train.init_adam_state(tree), cfg)
    step = new["p"] - tree["p"]
    assert np.max(np.abs(step + cfg.lr * np.sign(grads["p"]))) < 1e-3 * cfg.lr
    assert state.t == 1


def test_adam_zero_gradient_keeps_parameters():
    tree = {"p": np.array([0.5, -0.5])}
    grads = {"p": np.zeros(2)}
    new, _ = train.adam_step(tree, grads, train.init_adam_state(tree),
                             train.TrainConfig())
    assert np.array_equal(new["p"], tree["p"])


def test_adam_zero_gradient_decays_moments():
    tree = {"p": np.array([0.5, -0.5])}
    grads = {"p": np.zeros(2)}
    state = train.init_adam_state(tree)
    state.m["p"][:] = 0.3
    state.v["p"][:] = 0.09
    _, state2 = train.adam_step(tree, grads, state, train.TrainConfig())
    assert np.all(state2.m["p"] < 0.3) and np.all(state2.v["p"] < 0.09)
    assert np.all(state2.m["p"] > 0.0) and np.all(state2.v["p"] > 0.0)


def test_adam_three_steps_match_hand_oracle():
    # f(p) = p^2, grad = 2p, starting at p = 1
    lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
    p = 1.0
    m = v = 0.0
    expected = []
    for t in range(1, 4):
        gr = 2.0 * p
        m = b1 * m + (1 - b1) * gr
        v = b2 * v + (1 - b2) * gr * gr
        p = p - lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)
        expected.append(p)

    tree = {"p": np.array([1.0])}
    state = train.init_adam_state(tree)
    cfg = train.TrainConfig(lr=lr, betas=(b1, b2), adam_eps=eps)
    got = []
    for _ in range(3):
        grads = {"p": 2.0 * tree["p"]}
        tree, state = train.adam_step(tree, grads, state, cfg)
        got.append(float(tree["p"][0]))
    assert np.max(np.abs(np.array(got) - np.array(expected))) < 1e-12


def test_adam_invariant_to_tree_ordering():
    rng = np.random.default_rng(4)
    tree = {"a": rng.standard_normal(3), "b": rng.standard_normal(2)}
    grads = {"a": rng.standard_normal(3), "b": rng.standard_normal(2)}
    cfg = train.TrainConfig()
    fwd, _ = train.adam_step(tree, grads, train.init_adam_state(tree), cfg)
    rev_tree = {"b": tree["b"], "a": tree["a"]}
    rev_grads = {"b": grads["b"], "a": grads["a"]}
    rev, _ = train.adam_step(rev_tree, rev_grads, train.init_adam_state(rev_tree), cfg)
    for k in tree:
        assert np.array_equal(fwd[k], rev[k])


def test_adam_shape_mismatch():
    tree = {"p": np.zeros(3)}
    grads = {"p": np.zeros(4)}
    with pytest.raises(Exception):
        train.adam_step(tree, grads, train.init_adam_state(tree), train.TrainConfig())


# ------------------------------------------------------------------ loop

def _tiny_setup(iters):
    mcfg = model.ModelConfig(channels=8, dw_kernel=3, n_fmb=1, scale=2)
    tcfg = train.TrainConfig(batch=2, patch=8, iters=iters, seed=3, scale=2)
    ds = train.make_dataset(train.synthetic_images(4, 24, seed=8), 2)
    return mcfg, tcfg, ds


def test_train_loop_zero_iters_returns_init():
    mcfg, tcfg, ds = _tiny_setup(0)
    tree, history = train.train_loop(mcfg, tcfg, ds)
    init = weights.init_params(mcfg, tcfg.seed)
    assert history == []
    for name in init:
        assert np.array_equal(tree[name], init[name])


def test_train_loop_deterministic():
    mcfg, tcfg, ds = _tiny_setup(5)
    tree_a, hist_a = train.train_loop(mcfg, tcfg, ds)
    tree_b, hist_b = train.train_loop(mcfg, tcfg, ds)
    assert hist_a == hist_b
    for name in tree_a:
        assert np.array_equal(tree_a[name], tree_b[name])


def test_train_loop_losses_finite():
    mcfg, tcfg, ds = _tiny_setup(10)
    _, history = train.train_loop(mcfg, tcfg, ds)
    assert len(history) == 10
    assert all(np.isfinite(v) for v in history)


# ------------------------------------------------------------ grad check

def test_grad_check_tiny_model():
    cfg = model.ModelConfig(channels=8, dw_kernel=3, n_fmb=1, scale=2)
    assert train.grad_check(cfg) < 1e-4


def test_every_parameter_tensor_influences_loss():
    # perturbing any single tensor (upsampler included) must change the loss
    with tensor.use_precision("float64"):
        cfg = model.ModelConfig(channels=8, dw_kernel=3, n_fmb=1, scale=2)
        tree = weights.init_params(cfg, 7)
        rng = np.random.default_rng(9)
        lr_img = np.ascontiguousarray(rng.uniform(0, 1, (1, 3, 8, 8)))
        gt = ops.bilinear_resize(lr_img, 2) - 1.0
        base = train.total_loss(model.forward(tree, cfg, lr_img), gt, 0.1)
        for name in ["up.0.conv.coeffs", "head.conv.bias", "stem.conv.coeffs",
                     "fmb.0.mixer.0.proj_in.norm.gamma", "fmb.0.fuse.expand.coeffs"]:
            tampered = {k: v.copy() for k, v in tree.items()}
            tampered[name].reshape(-1)[0] += 0.05
            changed = train.total_loss(model.forward(tampered, cfg, lr_img), gt, 0.1)
            assert changed != base, name
