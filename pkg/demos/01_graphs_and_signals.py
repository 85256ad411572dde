# Time-varying graphs and smooth signals
#
# A sequence of K graphs is drawn by sampling one random graph and then
# flipping a small fraction of its node pairs at every step.  Signals on each
# graph are smooth: they come from a low-pass filter driven by white noise.

import numpy as np

from tvgraph.graphs import GraphGeneratorSpec, edge_support, generate_graph_sequence, is_laplacian
from tvgraph.signals import corrupt, generate_smooth_signals

spec = GraphGeneratorSpec("BA", 30, seed=3)
Ls = generate_graph_sequence(spec, 4)
print("resolved generator params:", spec.resolved_params())

# Every snapshot is a valid combinatorial Laplacian.
for k, L in enumerate(Ls):
    print(k, "edges", int(edge_support(L).sum() // 2), "valid", is_laplacian(L))

# Consecutive snapshots share most of their edges.
for k in range(1, len(Ls)):
    a, b = edge_support(Ls[k - 1]), edge_support(Ls[k])
    print(f"{k - 1}->{k}: {int((a != b).sum() // 2)} edges changed")

# Smoothness: tr(X^T L X) per sample is far below that of white noise.
rng = np.random.default_rng(0)
X = generate_smooth_signals(Ls[0], 200, rng=rng)
W = rng.standard_normal(X.shape) * X.std()
smooth = np.trace(X.T @ Ls[0] @ X) / 200
rough = np.trace(W.T @ Ls[0] @ W) / 200
print(f"variation: smooth {smooth:.2f}, white {rough:.2f}")

# Observation: keep 80% of the entries and add noise to the kept ones.
obs = corrupt(X, 0.8, 0.1, rng)
print("observed fraction", obs.mask.mean().round(3), "noise std", obs.noise_std)
