"""Dataset loaders, exporters and link-prediction edge splits.

Supported layouts:

* Planetoid ``.content`` / ``.cites`` (whitespace separated).
* Generic CSV: ``nodes.csv`` with header ``id,label,f0,...`` and
  ``edges.csv`` with header ``src,dst[,weight]``.
* geom-gcn ``out1_node_feature_label.txt`` / ``out1_graph_edges.txt``.
* PubMed-Diabetes ``.NODE.paper.tab`` / ``.DIRECTED.cites.tab``.

Class indices follow lexicographic order of the label strings.
"""

from __future__ import annotations

import csv
import json
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ClassContrastWarning, DataError
from .graph import Graph, NodeTable, _largest_remainder

log = logging.getLogger(__name__)


def _index_labels(raw_labels):
    names = sorted(set(raw_labels))
    lookup = {name: i for i, name in enumerate(names)}
    return np.array([lookup[x] for x in raw_labels], dtype=np.int64), tuple(names)


def _feature_kind(features):
    return "binary" if np.isin(features, (0.0, 1.0)).all() else "real"


def _build(ids, raw_labels, features, src, dst, weights=None, directed=True):
    labels, names = _index_labels(raw_labels)
    feats = np.asarray(features, dtype=np.float64).reshape(len(ids), -1)
    nt = NodeTable(feats, labels, len(names), _feature_kind(feats), names, tuple(ids))
    g = Graph.from_edges(len(ids), src, dst, weights, directed=directed)
    return g, nt


def _register(ids, node_id, where):
    if node_id in ids:
        raise DataError(f"{where}: duplicate node id {node_id!r}")
    ids[node_id] = len(ids)


def _map_edges(pairs, ids, where):
    src, dst, dropped = [], [], 0
    for a, b in pairs:
        if a in ids and b in ids:
            src.append(ids[a])
            dst.append(ids[b])
        else:
            dropped += 1
    if dropped:
        warnings.warn(f"{where}: dropped {dropped} edge(s) with unknown node ids",
                      ClassContrastWarning, stacklevel=3)
    return src, dst


def load_content_cites(content_path, cites_path, directed=True):
    """Planetoid layout. A cites row ``cited citing`` becomes the edge citing -> cited."""
    ids, labels, rows = {}, [], []
    with open(content_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 2:
                raise DataError(f"{content_path}:{lineno}: expected 'id features... label'")
            _register(ids, parts[0], f"{content_path}:{lineno}")
            try:
                rows.append([float(v) for v in parts[1:-1]])
            except ValueError as exc:
                raise DataError(f"{content_path}:{lineno}: {exc}") from None
            labels.append(parts[-1])
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise DataError(f"{content_path}: rows have differing feature counts {sorted(widths)}")
    pairs = []
    with open(cites_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise DataError(f"{cites_path}:{lineno}: expected 'cited citing'")
            pairs.append((parts[1], parts[0]))
    src, dst = _map_edges(pairs, ids, str(cites_path))
    return _build(list(ids), labels, rows, src, dst, directed=directed)


def _number(cell, path, row, col, name):
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"{path}: row {row}, column {col} ({name}): "
                        f"not a number: {cell!r}") from None


def load_generic_csv(nodes_csv, edges_csv, directed=True):
    """Load the generic CSV pair. Undirected loading mirrors every edge."""
    ids, labels, rows = {}, [], []
    with open(nodes_csv, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or [h.strip() for h in header[:2]] != ["id", "label"]:
            raise DataError(f"{nodes_csv}: header must start with 'id,label'")
        for r, rec in enumerate(reader, 2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise DataError(f"{nodes_csv}: row {r} has {len(rec)} cells, expected {len(header)}")
            _register(ids, rec[0], f"{nodes_csv}: row {r}")
            labels.append(rec[1])
            rows.append([_number(c, nodes_csv, r, j + 3, header[j + 2])
                         for j, c in enumerate(rec[2:])])
    src, dst, weights = [], [], []
    with open(edges_csv, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header[:2] != ["src", "dst"] or len(header) not in (2, 3):
            raise DataError(f"{edges_csv}: header must be 'src,dst[,weight]'")
        weighted = len(header) == 3
        for r, rec in enumerate(reader, 2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise DataError(f"{edges_csv}: row {r} has {len(rec)} cells, expected {len(header)}")
            for c, node in enumerate(rec[:2], 1):
                if node not in ids:
                    raise DataError(f"{edges_csv}: row {r}, column {c}: unknown node id {node!r}")
            src.append(ids[rec[0]])
            dst.append(ids[rec[1]])
            if weighted:
                weights.append(_number(rec[2], edges_csv, r, 3, "weight"))
    return _build(list(ids), labels, rows if rows else np.zeros((len(ids), 0)), src, dst,
                  weights if weighted else None, directed)


def _fmt(x):
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 2**53 else repr(x)


def export_generic_csv(g: Graph, nt: NodeTable, nodes_csv, edges_csv):
    """Write ``g``/``nt`` in the generic CSV layout (each undirected edge once)."""
    with open(nodes_csv, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label"] + [f"f{j}" for j in range(nt.feature_dim)])
        for i in range(nt.node_count):
            w.writerow([nt.node_ids[i], nt.class_names[nt.labels[i]]]
                       + [_fmt(v) for v in nt.features[i]])
    src, dst, wts = g.edges()
    with open(edges_csv, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst", "weight"] if g.weighted else ["src", "dst"])
        for k in range(src.size):
            row = [nt.node_ids[src[k]], nt.node_ids[dst[k]]]
            w.writerow(row + [_fmt(wts[k])] if g.weighted else row)


def load_geom_gcn(directory, directed=True):
    """geom-gcn layout: tab-separated ``node_id  f1,f2,...  label`` plus an edge list."""
    directory = Path(directory)
    feat_path = directory / "out1_node_feature_label.txt"
    ids, labels, rows = {}, [], []
    with open(feat_path, encoding="utf-8") as fh:
        next(fh, None)
        for lineno, line in enumerate(fh, 2):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise DataError(f"{feat_path}:{lineno}: expected 3 tab-separated fields")
            _register(ids, parts[0], f"{feat_path}:{lineno}")
            try:
                rows.append([float(v) for v in parts[1].split(",")])
            except ValueError as exc:
                raise DataError(f"{feat_path}:{lineno}: {exc}") from None
            labels.append(parts[2])
    edge_path = directory / "out1_graph_edges.txt"
    pairs = []
    with open(edge_path, encoding="utf-8") as fh:
        next(fh, None)
        for line in fh:
            parts = line.split()
            if len(parts) == 2:
                pairs.append((parts[0], parts[1]))
    src, dst = _map_edges(pairs, ids, str(edge_path))
    return _build(list(ids), labels, rows, src, dst, directed=directed)


def load_pubmed_diabetes(node_tab, cites_tab, directed=True):
    """PubMed-Diabetes tab files. Features are the TF-IDF columns named in the header."""
    with open(node_tab, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if len(lines) < 2:
        raise DataError(f"{node_tab}: missing header lines")
    vocab = {}
    for field in lines[1].split("\t"):
        parts = field.split(":")
        if len(parts) >= 3 and parts[0] == "numeric":
            vocab.setdefault(parts[1], len(vocab))
    ids, labels, rows = {}, [], []
    for lineno, line in enumerate(lines[2:], 3):
        parts = line.split("\t")
        if len(parts) < 2:
            continue
        _register(ids, parts[0], f"{node_tab}:{lineno}")
        row = np.zeros(len(vocab))
        label = None
        for field in parts[1:]:
            key, _, value = field.partition("=")
            if key == "label":
                label = value
            elif key in vocab:
                row[vocab[key]] = float(value)
        if label is None:
            raise DataError(f"{node_tab}:{lineno}: no label field")
        labels.append(label)
        rows.append(row)
    pairs = []
    with open(cites_tab, encoding="utf-8") as fh:
        for line in fh.read().splitlines()[2:]:
            parts = line.split("\t")
            if len(parts) == 4:
                pairs.append((parts[1].removeprefix("paper:"), parts[3].removeprefix("paper:")))
    src, dst = _map_edges(pairs, ids, str(cites_tab))
    return _build(list(ids), labels, np.array(rows), src, dst, directed=directed)


def load_dataset(path, directed=True):
    """Detect the layout of a dataset directory and load it."""
    path = Path(path)
    if not path.is_dir():
        raise DataError(f"{path}: not a directory")
    content = sorted(path.glob("*.content"))
    cites = sorted(path.glob("*.cites"))
    if content and cites:
        return load_content_cites(content[0], cites[0], directed)
    if (path / "out1_node_feature_label.txt").exists():
        return load_geom_gcn(path, directed)
    node_tab = sorted(path.glob("*NODE.paper.tab"))
    cite_tab = sorted(path.glob("*cites.tab"))
    if node_tab and cite_tab:
        return load_pubmed_diabetes(node_tab[0], cite_tab[0], directed)
    if (path / "nodes.csv").exists() and (path / "edges.csv").exists():
        return load_generic_csv(path / "nodes.csv", path / "edges.csv", directed)
    raise DataError(f"{path}: no recognised dataset files")


def dataset_stats(g: Graph, nt: NodeTable) -> dict:
    return {"nodes": nt.node_count, "edges": g.edge_count,
            "classes": nt.class_count, "features": nt.feature_dim}


# -- exporters ------------------------------------------------------------------

def export_embeddings_csv(path, embeddings, node_ids):
    x = np.asarray(embeddings, dtype=np.float64)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + [f"dim{j}" for j in range(x.shape[1])])
        for nid, row in zip(node_ids, x):
            w.writerow([nid] + [_fmt(v) for v in row])


def write_json(path, obj):
    """Deterministic JSON: sorted keys, fixed indentation, no NaN."""
    text = json.dumps(obj, sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


# -- link-prediction splits -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class LinkSplit:
    """Unordered node pairs ``(u, v)`` with ``u < v``, one ``(m, 2)`` array per part."""

    train_pos: np.ndarray
    val_pos: np.ndarray
    test_pos: np.ndarray
    train_neg: np.ndarray
    val_neg: np.ndarray
    test_neg: np.ndarray
    seed: int
    node_count: int

    def training_graph(self, g: Graph) -> Graph:
        """``g`` restricted to edges whose pair is a training positive (orientation kept)."""
        src, dst, w = g.edges()
        keys = np.minimum(src, dst) * g.node_count + np.maximum(src, dst)
        train = self.train_pos[:, 0] * g.node_count + self.train_pos[:, 1]
        keep = np.isin(keys, train)
        return Graph.from_edges(g.node_count, src[keep], dst[keep],
                                w[keep] if g.weighted else None, directed=g.directed)


def _unique_pairs(g):
    src, dst, _ = g.edges()
    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    keys = np.unique(lo * g.node_count + hi)
    return np.column_stack([keys // g.node_count, keys % g.node_count])


def _sample_non_edges(n, edge_keys, need, rng):
    """``need`` distinct uniform non-edge pairs ``u < v``, in draw order."""
    total = n * (n - 1) // 2
    available = total - edge_keys.size
    if need > available:
        raise DataError(f"need {need} negative pairs but the graph has only {available} "
                        f"non-edges (short by {need - available})")
    if need == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if available < 4 * need or total <= 200_000:
        iu, ju = np.triu_indices(n, 1)
        keys = iu * n + ju
        keys = keys[~np.isin(keys, edge_keys)]
        picked = rng.choice(keys, size=need, replace=False)
    else:
        picked, seen = [], set(edge_keys.tolist())
        while len(picked) < need:
            u = rng.integers(0, n, 2 * need)
            v = rng.integers(0, n, 2 * need)
            for a, b in zip(u.tolist(), v.tolist()):
                if a == b:
                    continue
                key = min(a, b) * n + max(a, b)
                if key not in seen:
                    seen.add(key)
                    picked.append(key)
                    if len(picked) == need:
                        break
        picked = np.array(picked, dtype=np.int64)
    return np.column_stack([picked // n, picked % n])


def make_link_split(g: Graph, ratios=(0.85, 0.05, 0.10), seed=0) -> LinkSplit:
    """Shuffle unique unordered edges into train/val/test and draw matching negatives."""
    pairs = _unique_pairs(g)
    if len(pairs) < 20:
        raise DataError(f"link split needs at least 20 edges, graph has {len(pairs)}")
    rng = np.random.default_rng(seed)
    pairs = pairs[rng.permutation(len(pairs))]
    counts = _largest_remainder(len(pairs), ratios)
    cut = np.cumsum(counts)[:-1]
    pos = np.split(pairs, cut)
    keys = pairs[:, 0] * g.node_count + pairs[:, 1]
    neg = np.split(_sample_non_edges(g.node_count, np.sort(keys), len(pairs), rng), cut)
    log.debug("link split seed=%s: %s positives per part", seed, counts.tolist())
    return LinkSplit(*pos, *neg, seed=seed, node_count=g.node_count)
