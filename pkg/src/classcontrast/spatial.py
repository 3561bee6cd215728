"""Spatial embedding rows: class counts over k-hop neighborhoods.

Hidden labels are encoded as ``-1`` in a ``labels_visible`` array. In
transductive mode an extra last column counts neighbors whose label is
hidden.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .graph import Direction, Graph, Role, k_hop_neighborhood, neighborhood_matrix

HIDDEN = -1


def visible_labels(labels, split=None, hidden_roles=(Role.TEST,)):
    """Copy of ``labels`` with nodes of ``hidden_roles`` set to ``HIDDEN``."""
    vis = np.array(labels, dtype=np.int64)
    if split is not None:
        for role in hidden_roles:
            vis[split.mask(role)] = HIDDEN
    return vis


def _width(class_count, transductive):
    return class_count + int(transductive)


def _class_count(labels_visible, class_count):
    if class_count is None:
        return int(labels_visible.max()) + 1
    return class_count


def spatial_counts(g: Graph, labels_visible, u, k, direction=Direction.ANY,
                   transductive=False, class_count=None, exact=False):
    """Count visible neighbors of each class within ``k`` hops of ``u``."""
    labels_visible = np.asarray(labels_visible)
    n_cls = _class_count(labels_visible, class_count)
    out = np.zeros(_width(n_cls, transductive))
    for v in k_hop_neighborhood(g, u, k, direction, exact=exact):
        c = labels_visible[v]
        if c >= 0:
            out[c] += 1
        elif transductive:
            out[-1] += 1
    return out


def _one_hot(labels_visible, n_cls, transductive):
    n = labels_visible.size
    cols = np.where(labels_visible >= 0, labels_visible, n_cls)
    keep = (labels_visible >= 0) | transductive
    return sp.csr_matrix((np.ones(int(keep.sum())), (np.flatnonzero(keep), cols[keep])),
                         shape=(n, _width(n_cls, transductive)))


def spatial_matrix(g: Graph, labels_visible, k, direction=Direction.ANY,
                   transductive=False, class_count=None, exact=False):
    """Spatial row for every node at once; row ``u`` equals ``spatial_counts(g, ..., u, ...)``."""
    labels_visible = np.asarray(labels_visible)
    n_cls = _class_count(labels_visible, class_count)
    reach = neighborhood_matrix(g, k, direction, exact=exact)
    return np.asarray((reach @ _one_hot(labels_visible, n_cls, transductive)).todense())


# -- weighted variants ----------------------------------------------------------

def _edge_lists(g, direction):
    adj = g.adjacency(direction, weighted=True)
    return adj.indptr, adj.indices, adj.data


def _first_edge_weights(g, u, k, direction, exact=False):
    """Map each node within ``k`` hops of ``u`` to the weight of the first edge
    on its hop-shortest path of least total weight (ties: lowest first hop)."""
    indptr, idx, w = _edge_lists(g, Direction(direction))
    best = {u: (0, 0.0, -1, 0.0)}  # node -> (hops, total, first hop, first weight)
    layer = [u]
    for d in range(k):
        cand = {}
        for x in layer:
            _, total, first, fw = best[x]
            for y, wy in zip(idx[indptr[x]:indptr[x + 1]].tolist(), w[indptr[x]:indptr[x + 1]].tolist()):
                if y in best:
                    continue
                key = (total + wy, y if d == 0 else first)
                if y not in cand or key < cand[y][:2]:
                    cand[y] = key + (wy if d == 0 else fw,)
        for y, (total, first, fw) in cand.items():
            best[y] = (d + 1, total, first, fw)
        layer = sorted(cand)
    return {v: fw for v, (h, _, _, fw) in best.items()
            if v != u and (not exact or h == k)}


def spatial_counts_weighted(g: Graph, labels_visible, u, k, direction=Direction.ANY,
                            mode="sum", class_count=None, transductive=False, exact=False):
    """Weighted class counts: each neighbor adds its first-edge weight (or its reciprocal)."""
    if mode not in ("sum", "reciprocal"):
        raise ConfigError(f"unknown weight mode {mode!r}")
    g._check(u)
    labels_visible = np.asarray(labels_visible)
    n_cls = _class_count(labels_visible, class_count)
    out = np.zeros(_width(n_cls, transductive))
    for v, wv in sorted(_first_edge_weights(g, int(u), k, direction, exact).items()):
        c = labels_visible[v]
        if c < 0 and not transductive:
            continue
        out[c if c >= 0 else -1] += wv if mode == "sum" else 1.0 / wv
    return out


def weighted_spatial_matrix(g, labels_visible, k, direction=Direction.ANY, mode="sum",
                            transductive=False, class_count=None, exact=False):
    labels_visible = np.asarray(labels_visible)
    n_cls = _class_count(labels_visible, class_count)
    return np.vstack([
        spatial_counts_weighted(g, labels_visible, u, k, direction, mode, n_cls, transductive, exact)
        for u in range(g.node_count)
    ]) if g.node_count else np.zeros((0, _width(n_cls, transductive)))


# -- blocks ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpatialBlock:
    rows: tuple
    values: np.ndarray
    transductive: bool
    class_count: int

    @property
    def row_width(self):
        return _width(self.class_count, self.transductive)

    @property
    def column_names(self):
        names = []
        for r in self.rows:
            names += [f"{r.name}[{j}]" for j in range(self.class_count)]
            if self.transductive:
                names.append(f"{r.name}[unknown]")
        return names


def build_spatial_block(g: Graph, nt, split, recipe, prediction_map=None,
                        hidden_roles=(Role.TEST,)) -> SpatialBlock:
    """Build every spatial row of ``recipe`` for all nodes.

    With ``split=None`` all labels are visible and rows have width N. With a
    split, labels of ``hidden_roles`` are hidden: rows gain an unknown column
    unless ``prediction_map`` supplies a class for every hidden node.
    """
    rows = recipe.spatial_rows
    if not g.directed and any(r.direction is not Direction.ANY for r in rows):
        raise ConfigError(f"recipe {recipe.name!r} asks for directional rows on an undirected graph")
    n_cls = nt.class_count
    vis = visible_labels(nt.labels, split, hidden_roles)
    hidden = vis == HIDDEN
    transductive = split is not None
    if prediction_map is not None and transductive:
        pred = np.asarray(prediction_map, dtype=np.int64)
        if pred.shape != vis.shape or np.any((pred[hidden] < 0) | (pred[hidden] >= n_cls)):
            raise ConfigError("prediction_map must give a class in [0, N) for every hidden node")
        vis[hidden] = pred[hidden]
        transductive = False
    blocks = []
    for r in rows:
        if r.weight_mode:
            if not g.weighted:
                raise ConfigError(f"row {r.name} needs a weighted graph")
            m = weighted_spatial_matrix(g, vis, r.hops, r.direction, r.weight_mode,
                                        transductive, n_cls, r.exact)
        else:
            m = spatial_matrix(g, vis, r.hops, r.direction, transductive, n_cls, r.exact)
        blocks.append(m)
    values = np.hstack(blocks) if blocks else np.zeros((g.node_count, 0))
    return SpatialBlock(tuple(rows), values, transductive, n_cls)
