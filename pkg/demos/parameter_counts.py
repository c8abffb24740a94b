"""Parameter counting
====================

Where the weights of a mixing encoder live, and why doubling the position
budget costs exactly max_positions * d_model extra parameters and nothing
else: token mixing carries no weights, so sequence length only enters
through the learned position table.

Run with: python3 demos/parameter_counts.py
"""

from specmix import base_encoder_config, count_params, param_shapes

# the reference configuration: 12 layers, d_model 768, 32k vocab
base_4k = base_encoder_config(max_positions=4096)
base_8k = base_encoder_config(max_positions=8192)

n_4k = count_params(base_4k)
n_8k = count_params(base_8k)
print(f"base encoder, 4096 positions: {n_4k:,} parameters")
print(f"base encoder, 8192 positions: {n_8k:,} parameters")
print(f"delta: {n_8k - n_4k:,} == 8192*768 - 4096*768 = {4096 * 768:,}")

# group the full shape table by component
shapes = param_shapes(base_4k)
groups = {}
for name, shape in shapes.items():
    key = name.split(".")[0] if not name.startswith("layer") else "layers"
    size = 1
    for dim in shape:
        size *= dim
    groups[key] = groups.get(key, 0) + size

print("\nbreakdown by component:")
for key in ("embeddings", "layers", "pooler", "mlm"):
    share = 100.0 * groups[key] / n_4k
    print(f"  {key:10s} {groups[key]:>12,}  ({share:4.1f}%)")

# dropping the pretraining head removes the mlm.* block only
bare = count_params(base_4k, with_mlm_head=False)
print(f"\nwithout the masked-token head: {bare:,} (saves {n_4k - bare:,})")

# mixing kind never changes the count: the mixing map has no parameters
per_layer = [n for n in shapes if n.startswith("layer0.")]
print(f"\nper-layer tensors ({len(per_layer)}): {', '.join(per_layer)}")
print("no mixing weights in the list: the spectral map is parameter-free")
