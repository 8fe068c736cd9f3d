"""Closed-form complexity audit of the stock configurations.

Prints the parameter/MAC accounting for the base and tiny models at all
three scales (MACs measured for a 1280x720 output), the depth-wise kernel
sweep, and the trunk/fusion ablations, then cross-checks one count against
an actually instantiated parameter tree.

Run:  python3 demos/02_complexity_audit.py
"""

from shufflesr import complexity, model, weights

LR_FOR_SCALE = {2: (360, 640), 3: (240, 427), 4: (180, 320)}

print("== base (D=64, k=7) and tiny (D=32, k=3) models, 1280x720 output ==")
print(f"{'config':<16} {'params':>10} {'disp':>6} {'macs':>16} {'disp':>8}")
for d, k in [(64, 7), (32, 3)]:
    for s in (2, 3, 4):
        cfg = model.ModelConfig(channels=d, dw_kernel=k, n_fmb=5, scale=s)
        lr_h, lr_w = LR_FOR_SCALE[s]
        rep = complexity.report(cfg, lr_h, lr_w)
        print(f"D={d:<3} k={k} x{s}     {rep.total_params:>10,} "
          f"{complexity.params_display(rep.total_params):>6} "
          f"{rep.total_macs:>16,} {complexity.macs_display(rep.total_macs):>8}")

print()
print("== depth-wise kernel sweep (tiny trunk, x4, 256x256 input) ==")
for k in (3, 5, 7, 9, 11, 13):
    cfg = model.ModelConfig(channels=32, dw_kernel=k, n_fmb=5, scale=4)
    params = complexity.count_params(cfg)
    macs = complexity.count_macs(cfg, 256, 256)
    print(f"k={k:<2}  {params:>8,} params  {macs / 1e9:>6.2f}G MACs")

print()
print("== trunk and fusion ablations (D=32, k=3, x4, 256x256 input) ==")
rows = [("convmixer_baseline", None), ("css", None), ("cdc", None),
        ("cdc", "conv"), ("cdc", "s_conv"), ("cdc", "c_conv"),
        ("cdc", "s_resblock"), ("cdc", "s_fmbconv")]
for variant, fusion in rows:
    cfg = model.ModelConfig(channels=32, dw_kernel=3, n_fmb=5, scale=4,
                            variant=variant, fusion=fusion)
    params = complexity.count_params(cfg)
    macs = complexity.count_macs(cfg, 256, 256)
    label = variant if fusion in (None, "none") else f"{variant}+{cfg.fusion}"
    print(f"{label:<22} {params:>8,} params  {macs / 1e9:>6.2f}G MACs")

print()
print("== accounting vs. instantiation ==")
cfg = model.ModelConfig(channels=64, dw_kernel=7, n_fmb=5, scale=4)
counted = complexity.count_params(cfg)
instantiated = sum(v.size for v in weights.init_params(cfg, 0).values())
print(f"closed-form count: {counted:,}; instantiated tree: {instantiated:,}; "
      f"equal: {counted == instantiated}")

print()
print("== per-layer breakdown of a small model ==")
small = model.ModelConfig(channels=16, dw_kernel=3, n_fmb=1, scale=2)
print(complexity.format_table(complexity.report(small, 32, 32)))
