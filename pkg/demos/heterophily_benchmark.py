"""
Node classification on a synthetic heterophilous graph
======================================================

Edges mostly join class c to class c+1, so neighbours rarely share a label.
Plain feature models struggle here, while class-count vectors pick up the
pattern directly. Runs in a few seconds.
"""

import warnings

import numpy as np

from classcontrast import (ClassContrastWarning, Graph, NodeTable, PipelineConfig,
                           edge_homophily, node_homophily, run_ablation)

rng = np.random.default_rng(7)
n_cls, per_cls = 4, 60
labels = np.repeat(np.arange(n_cls), per_cls)
n = labels.size

# 85% of edges go to the "next" class, the rest land anywhere.
src = rng.integers(0, n, 6 * n)
target_cls = np.where(rng.random(src.size) < 0.85, (labels[src] + 1) % n_cls,
                      rng.integers(0, n_cls, src.size))
dst = np.array([rng.choice(np.flatnonzero(labels == c)) for c in target_cls])
g = Graph.from_edges(n, src, dst, directed=True)

# Binary bag-of-words where each class slightly prefers its own block of words.
prefs = np.repeat(np.eye(n_cls), 5, axis=1) * 0.25 + 0.1
words = (rng.random((n, 20)) < prefs[labels]).astype(float)
nt = NodeTable.from_arrays(words, labels)

print(f"node homophily {node_homophily(g, labels):.3f}, edge homophily {edge_homophily(g, labels):.3f}")

# %%
# Compare spatial-only, context-only and combined embeddings over five seeds.
cfg = PipelineConfig(seeds=range(5), iterations=1, epochs=150, hidden=(64,))
with warnings.catch_warnings():
    warnings.simplefilter("ignore", ClassContrastWarning)
    reports = run_ablation(cfg, data=(g, nt))

for mode, report in reports.items():
    print(f"{mode:8s} {report.headline}: {100 * report.mean:5.1f} ± {100 * report.std:.1f}")
