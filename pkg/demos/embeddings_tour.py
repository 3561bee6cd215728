"""
A tour of the embedding blocks on a toy citation graph
======================================================

Run with ``python demos/embeddings_tour.py``. Nothing is downloaded.
"""

import numpy as np

from classcontrast import (DatasetRecipe, Direction, Graph, NodeTable, SpatialRow,
                           build_spatial_block, compute_landmarks, contextual_vector,
                           homophily_matrix, node_homophily, spatial_counts)

# Six papers, three topics. An edge u -> v means u cites v.
g = Graph.from_edges(6, [0, 0, 1, 2, 3, 4, 5], [1, 2, 3, 4, 5, 0, 1], directed=True)
labels = np.array([0, 0, 1, 1, 2, 2])
words = np.array([[1, 1, 0, 0],
                  [1, 0, 1, 0],
                  [0, 1, 1, 0],
                  [0, 0, 1, 1],
                  [1, 0, 0, 1],
                  [0, 0, 0, 1]], dtype=float)
nt = NodeTable.from_arrays(words, labels, class_names=("ai", "db", "theory"))

# %%
# Spatial vectors count neighbours per class. Node 0 sees 1 (ai), 2 (db) and 4 (theory).
print("1-hop counts of node 0:", spatial_counts(g, labels, 0, 1))
print("outgoing only:        ", spatial_counts(g, labels, 0, 1, Direction.OUTGOING))
print("2-hop counts:         ", spatial_counts(g, labels, 0, 2))

# Hide node 5's label: its neighbours now record it in a trailing "unknown" column.
hidden = labels.copy()
hidden[5] = -1
print("node 3 with node 5 hidden:", spatial_counts(g, hidden, 3, 1, transductive=True))

# %%
# A recipe stacks several rows into one block.
recipe = DatasetRecipe("toy", True, (SpatialRow(1, Direction.INCOMING),
                                     SpatialRow(1, Direction.OUTGOING)))
block = build_spatial_block(g, nt, None, recipe)
print("block rows:", [r.name for r in block.rows])
print(block.values)

# %%
# Contextual vectors measure how far each paper's words sit from each class centroid.
# With no split every labelled node contributes to its class landmark.
marks = compute_landmarks(nt, None, kind="centroid", measure="euclidean")
for u in range(nt.node_count):
    print(u, np.round(contextual_vector(nt.features[u], marks), 3))

# %%
# The homophily matrix averages normalised spatial rows per class.
alpha = np.vstack([spatial_counts(g, labels, u, 1) for u in range(6)])
m = homophily_matrix(alpha, labels)
print(np.round(m.values, 3))
print("alpha ratio", round(m.ratio, 3), "vs node homophily", round(node_homophily(g, labels), 3))
