"""Degradation and evaluation: make LR images the standard way, upscale them
with the weight-free baselines, and score everything on the luma channel.

Run:  python3 demos/05_metrics_and_degradation.py
"""

import numpy as np

from shufflesr import metrics, ops, train

scale = 2
proto = metrics.EvalProtocol(shave=scale)

print(f"== antialiased cubic degradation, then x{scale} baselines ==")
print(f"{'image':<8} {'bilinear':>18} {'bicubic':>18}")
for seed in (1, 2, 3, 4):
    hr = train.synthetic_images(1, 96, seed=seed)[0][None]
    lr = np.clip(ops.bicubic_resize(hr, 1.0 / scale), 0.0, 1.0)

    scores = {}
    for name, up in [("bilinear", ops.bilinear_resize(lr, scale)),
                     ("bicubic", ops.bicubic_resize(lr, float(scale)))]:
        y_up = metrics.rgb_to_y(np.clip(up, 0.0, 1.0))
        y_hr = metrics.rgb_to_y(hr)
        scores[name] = (metrics.psnr(y_up, y_hr, proto),
                        metrics.ssim(y_up, y_hr, proto))
    b = scores["bilinear"]
    c = scores["bicubic"]
    print(f"img{seed:<5} {b[0]:>8.2f}dB {b[1]:>7.4f} {c[0]:>9.2f}dB {c[1]:>7.4f}")

print()
print("== metric edge cases ==")
img = train.synthetic_images(1, 48, seed=9)[0][None]
y = metrics.rgb_to_y(img)
print(f"identical images: PSNR = {metrics.psnr(y, y)}, "
      f"SSIM = {metrics.ssim(y, y):.6f}")

offset = y + 25.5
print(f"uniform +25.5 offset (0-255 scale): PSNR = {metrics.psnr(y, offset):.4f} dB")

print()
print("== border shaving ==")
noisy_border = y.copy()
noisy_border[:, :, 0, :] += 40.0
print(f"top-row damage, no shave:  {metrics.psnr(y, noisy_border):.2f} dB")
print(f"top-row damage, shave={scale}:  "
      f"{metrics.psnr(y, noisy_border, proto)} (border excluded)")
