"""Train a tiny model end to end on procedural images, then use it.

Covers the whole loop: synthetic dataset, gradient check, a few hundred Adam
steps, PSNR/SSIM before and after, and a weights file that a fresh process
could reload bit-exactly.

Run:  python3 demos/04_train_tiny_model.py   (about a minute on one core)
"""

import tempfile
from pathlib import Path

import numpy as np

from shufflesr import metrics, model, train, weights

mcfg = model.ModelConfig(channels=16, dw_kernel=3, n_fmb=1, scale=2)
tcfg = train.TrainConfig(lr=5e-4, batch=4, patch=32, iters=300, lam=0.1,
                         seed=0, scale=2)

print("== gradient check first ==")
err = train.grad_check(model.ModelConfig(channels=8, dw_kernel=3, n_fmb=1, scale=2))
print(f"analytic vs central differences, max relative error: {err:.2e}")

print()
print("== data and training ==")
dataset = train.make_dataset(train.synthetic_images(16, 96, seed=100), mcfg.scale)
print(f"dataset: {len(dataset)} images, HR {dataset.hr[0].shape} / LR {dataset.lr[0].shape}")

tree0 = weights.init_params(mcfg, tcfg.seed)
tree, history = train.train_loop(mcfg, tcfg, dataset)
print(f"loss: first-50 mean {np.mean(history[:50]):.3f} -> "
      f"last-50 mean {np.mean(history[-50:]):.3f} over {tcfg.iters} steps")


def train_set_quality(t):
    proto = metrics.EvalProtocol(shave=mcfg.scale)
    ps, ss = [], []
    for hr, lr in zip(dataset.hr, dataset.lr):
        sr = np.clip(model.forward(t, mcfg, lr[None]), 0.0, 1.0)
        y_sr, y_hr = metrics.rgb_to_y(sr), metrics.rgb_to_y(hr[None])
        ps.append(metrics.psnr(y_sr, y_hr, proto))
        ss.append(metrics.ssim(y_sr, y_hr, proto))
    return float(np.mean(ps)), float(np.mean(ss))


p0, s0 = train_set_quality(tree0)
p1, s1 = train_set_quality(tree)
print(f"luma PSNR: {p0:.2f} dB -> {p1:.2f} dB    SSIM: {s0:.4f} -> {s1:.4f}")

print()
print("== persistence ==")
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "tiny_x2.smxw"
    weights.save(tree, mcfg, path)
    reloaded, cfg2 = weights.load(path)
    same = all(np.array_equal(reloaded[n], tree[n].astype(reloaded[n].dtype))
               for n in tree)
    print(f"saved {path.stat().st_size:,} bytes; reload bit-exact: {same}; "
          f"config round-trips: {cfg2 == mcfg}")

print()
print("== super-resolving an unseen image ==")
test_img = train.synthetic_images(1, 64, seed=777)[0]
ds1 = train.make_dataset([test_img], mcfg.scale)
sr = np.clip(model.forward(tree, mcfg, ds1.lr[0][None]), 0.0, 1.0)
proto = metrics.EvalProtocol(shave=mcfg.scale)
value = metrics.psnr(metrics.rgb_to_y(sr), metrics.rgb_to_y(ds1.hr[0][None]), proto)
print(f"held-out luma PSNR: {value:.2f} dB (output {sr.shape[2]}x{sr.shape[3]})")
