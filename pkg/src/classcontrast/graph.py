"""Immutable graph substrate, node tables, k-hop neighborhoods and splits."""

from __future__ import annotations

import enum
import logging
import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ClassContrastWarning, DataError

log = logging.getLogger(__name__)

MAX_HOPS = 3


class Direction(str, enum.Enum):
    """Which edges a neighborhood follows on a directed graph."""

    ANY = "any"
    INCOMING = "in"
    OUTGOING = "out"


class Role(enum.IntEnum):
    TRAIN = 0
    VAL = 1
    TEST = 2


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _csr(node_count, rows, cols, weights):
    order = np.lexsort((cols, rows))
    rows, cols, weights = rows[order], cols[order], weights[order]
    indptr = np.zeros(node_count + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    return _frozen(np.cumsum(indptr)), _frozen(cols), _frozen(weights)


@dataclass(frozen=True, eq=False)
class Graph:
    """Directed or undirected graph over dense integer ids ``0..node_count-1``.

    Adjacency is held in CSR form for both edge directions. For undirected
    graphs each edge is mirrored, so the outgoing and incoming views agree.
    Build instances with :meth:`from_edges`.
    """

    node_count: int
    directed: bool
    weighted: bool
    out_indptr: np.ndarray = field(repr=False)
    out_indices: np.ndarray = field(repr=False)
    out_weights: np.ndarray = field(repr=False)
    in_indptr: np.ndarray = field(repr=False)
    in_indices: np.ndarray = field(repr=False)
    in_weights: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, node_count, src, dst, weights=None, directed=True):
        """Build a graph from parallel edge arrays.

        Self-loops are dropped and duplicate pairs are collapsed with the
        first occurrence's weight kept. On undirected graphs ``(u, v)`` and
        ``(v, u)`` count as the same pair.
        """
        src = np.asarray(src, dtype=np.int64).reshape(-1)
        dst = np.asarray(dst, dtype=np.int64).reshape(-1)
        if src.shape != dst.shape:
            raise DataError("src and dst must have the same length")
        weighted = weights is not None
        if weighted:
            w = np.asarray(weights, dtype=np.float64).reshape(-1)
            if w.shape != src.shape:
                raise DataError("weights must match the number of edges")
        else:
            w = np.ones(src.shape, dtype=np.float64)
        if src.size and (src.min() < 0 or dst.min() < 0
                         or src.max() >= node_count or dst.max() >= node_count):
            raise DataError("edge endpoint outside [0, node_count)")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise DataError("edge weights must be finite and strictly positive")

        loops = src == dst
        if loops.any():
            log.info("dropped %d self-loop(s)", int(loops.sum()))
        src, dst, w = src[~loops], dst[~loops], w[~loops]

        if directed:
            a, b = src, dst
        else:
            a, b = np.minimum(src, dst), np.maximum(src, dst)
        # np.unique returns the first occurrence index for each distinct key
        key = a * node_count + b
        _, first = np.unique(key, return_index=True)
        first.sort()
        if first.size != key.size:
            log.info("collapsed %d duplicate edge(s)", key.size - first.size)
        a, b, w = a[first], b[first], w[first]

        if not directed:
            a, b, w = np.concatenate([a, b]), np.concatenate([b, a]), np.concatenate([w, w])
        out = _csr(node_count, a, b, w)
        inc = _csr(node_count, b, a, w)
        return cls(int(node_count), bool(directed), weighted, *out, *inc)

    # -- basic queries -----------------------------------------------------

    def _check(self, u):
        if not (isinstance(u, (int, np.integer)) and 0 <= u < self.node_count):
            raise ValueError(f"invalid node id {u!r} for graph with {self.node_count} nodes")

    def out_neighbors(self, u):
        """Return ``(ids, weights)`` of edges leaving ``u``."""
        self._check(u)
        s, e = self.out_indptr[u], self.out_indptr[u + 1]
        return self.out_indices[s:e], self.out_weights[s:e]

    def in_neighbors(self, u):
        """Return ``(ids, weights)`` of edges entering ``u``."""
        self._check(u)
        s, e = self.in_indptr[u], self.in_indptr[u + 1]
        return self.in_indices[s:e], self.in_weights[s:e]

    def neighbors(self, u, direction=Direction.ANY):
        direction = Direction(direction)
        if direction is Direction.OUTGOING:
            return self.out_neighbors(u)[0]
        if direction is Direction.INCOMING:
            return self.in_neighbors(u)[0]
        return np.union1d(self.out_neighbors(u)[0], self.in_neighbors(u)[0])

    @property
    def out_adjacency(self):
        return [list(zip(*(x.tolist() for x in self.out_neighbors(u)))) for u in range(self.node_count)]

    @property
    def in_adjacency(self):
        return [list(zip(*(x.tolist() for x in self.in_neighbors(u)))) for u in range(self.node_count)]

    def edges(self):
        """Distinct edges as ``(src, dst, weight)`` arrays; undirected pairs once with src < dst."""
        rows = np.repeat(np.arange(self.node_count), np.diff(self.out_indptr))
        cols, w = self.out_indices, self.out_weights
        if not self.directed:
            keep = rows < cols
            rows, cols, w = rows[keep], cols[keep], w[keep]
        return rows, np.asarray(cols), np.asarray(w)

    @property
    def edge_count(self):
        return int(self.edges()[0].size)

    def adjacency(self, direction=Direction.OUTGOING, weighted=False):
        """Sparse matrix whose row ``u`` lists the direction-``direction`` neighbors of ``u``.

        For ``Direction.ANY`` a pair linked both ways keeps the smaller weight.
        """
        direction = Direction(direction)
        n = self.node_count
        if direction is Direction.INCOMING:
            indptr, idx, w = self.in_indptr, self.in_indices, self.in_weights
        else:
            indptr, idx, w = self.out_indptr, self.out_indices, self.out_weights
        data = w if weighted else np.ones(idx.size)
        m = sp.csr_matrix((data, idx, indptr), shape=(n, n))
        if direction is Direction.ANY and self.directed:
            t = m.T.tocsr()
            if weighted:
                both = (m > 0).multiply(t > 0)
                m = (m + t) - (m + t).multiply(both) + m.minimum(t)
            else:
                m = ((m + t) > 0).astype(np.float64)
        m.sort_indices()
        return m.tocsr()

    def undirected(self):
        """Undirected view with both edge directions merged."""
        if not self.directed:
            return self
        a = self.adjacency(Direction.ANY, weighted=True).tocoo()
        w = a.data if self.weighted else None
        return Graph.from_edges(self.node_count, a.row, a.col, w, directed=False)

    def degrees(self, direction=Direction.ANY):
        return np.asarray(self.adjacency(direction).getnnz(axis=1))


@dataclass(frozen=True, eq=False)
class NodeTable:
    """Per-node features and class labels."""

    features: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    class_count: int
    feature_kind: str = "binary"
    class_names: tuple = ()
    node_ids: tuple = field(default=(), repr=False)

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if labels.size != feats.shape[0]:
            raise DataError(f"{feats.shape[0]} feature rows but {labels.size} labels")
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            raise DataError("label outside [0, class_count)")
        missing = np.setdiff1d(np.arange(self.class_count), labels)
        if missing.size:
            raise DataError(f"classes {missing.tolist()} have no members")
        if self.feature_kind not in ("binary", "real"):
            raise DataError(f"unknown feature kind {self.feature_kind!r}")
        object.__setattr__(self, "features", _frozen(feats))
        object.__setattr__(self, "labels", _frozen(labels))
        if not self.class_names:
            # zero-padded so lexicographic order matches index order
            width = len(str(max(self.class_count - 1, 0)))
            object.__setattr__(self, "class_names",
                               tuple(str(i).zfill(width) for i in range(self.class_count)))
        if not self.node_ids:
            object.__setattr__(self, "node_ids", tuple(str(i) for i in range(labels.size)))

    @classmethod
    def from_arrays(cls, features, labels, class_count=None, **kw):
        labels = np.asarray(labels, dtype=np.int64)
        if class_count is None:
            class_count = int(labels.max()) + 1 if labels.size else 0
        feats = np.asarray(features, dtype=np.float64)
        kind = kw.pop("feature_kind", None) or (
            "binary" if np.isin(feats, (0.0, 1.0)).all() else "real")
        return cls(feats, labels, class_count, kind, **kw)

    @property
    def node_count(self):
        return int(self.labels.size)

    @property
    def feature_dim(self):
        return int(self.features.shape[1])


@dataclass(frozen=True, eq=False)
class SplitAssignment:
    """Train/val/test role per node."""

    roles: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "roles", _frozen(np.asarray(self.roles, dtype=np.int8)))

    def mask(self, role):
        return self.roles == int(role)

    @property
    def train(self):
        return np.flatnonzero(self.mask(Role.TRAIN))

    @property
    def val(self):
        return np.flatnonzero(self.mask(Role.VAL))

    @property
    def test(self):
        return np.flatnonzero(self.mask(Role.TEST))


# -- neighborhoods ------------------------------------------------------------

def _step(g, u, direction):
    if direction is Direction.OUTGOING:
        return g.out_neighbors(u)[0]
    if direction is Direction.INCOMING:
        return g.in_neighbors(u)[0]
    return np.concatenate([g.out_neighbors(u)[0], g.in_neighbors(u)[0]])


def k_hop_neighborhood(g: Graph, u: int, k: int, direction=Direction.ANY, exact=False) -> set:
    """Nodes within ``k`` hops of ``u`` (``u`` itself excluded).

    ``Direction.OUTGOING`` follows edges forward, ``INCOMING`` backward, and
    ``ANY`` ignores direction. With ``exact=True`` only nodes at distance
    exactly ``k`` are returned.
    """
    direction = Direction(direction)
    g._check(u)
    if not 1 <= k <= MAX_HOPS:
        raise ValueError(f"hop count must be in [1, {MAX_HOPS}], got {k}")
    dist = {int(u): 0}
    queue = deque([int(u)])
    while queue:
        x = queue.popleft()
        if dist[x] == k:
            continue
        for y in _step(g, x, direction).tolist():
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    del dist[int(u)]
    if exact:
        return {v for v, d in dist.items() if d == k}
    return set(dist)


def neighborhood_matrix(g: Graph, k: int, direction=Direction.ANY, exact=False) -> sp.csr_matrix:
    """0/1 sparse matrix with ``M[u, v] = 1`` iff ``v`` is in the k-hop neighborhood of ``u``.

    Bulk counterpart of :func:`k_hop_neighborhood`, same conventions.
    """
    direction = Direction(direction)
    if not 1 <= k <= MAX_HOPS:
        raise ValueError(f"hop count must be in [1, {MAX_HOPS}], got {k}")
    step = g.adjacency(direction).astype(np.int32)
    eye = sp.identity(g.node_count, dtype=np.int32, format="csr")
    reach = step.copy()
    prev = eye
    for _ in range(k - 1):
        prev = reach
        nxt = (reach @ step + reach).tocsr()
        nxt.data[:] = 1
        reach = nxt
    reach = (reach - reach.multiply(eye)).tocsr()
    if exact and k > 1:
        reach = (reach - reach.multiply(prev)).tocsr()
    reach.eliminate_zeros()
    reach.data[:] = 1
    reach.sort_indices()
    return reach.astype(np.float64)


# -- splits -------------------------------------------------------------------

def _largest_remainder(total, fractions):
    quotas = np.asarray(fractions, dtype=np.float64) * total
    counts = np.floor(quotas + 1e-9).astype(int)
    rest = total - counts.sum()
    # stable sort keeps train > val > test priority on equal remainders
    order = np.argsort(-(quotas - counts), kind="stable")
    counts[order[:rest]] += 1
    return counts


def stratified_split(nt: NodeTable, fractions: Sequence[float] = (0.48, 0.32, 0.20),
                     seed: int = 0) -> SplitAssignment:
    """Per-class shuffled train/val/test split with exact largest-remainder counts."""
    fr = np.asarray(fractions, dtype=np.float64)
    if fr.shape != (3,) or np.any(fr <= 0) or abs(fr.sum() - 1.0) > 1e-9:
        raise ValueError(f"fractions must be three positive numbers summing to 1, got {fractions}")
    rng = np.random.default_rng(seed)
    roles = np.full(nt.node_count, Role.TRAIN, dtype=np.int8)
    for c in range(nt.class_count):
        members = np.flatnonzero(nt.labels == c)
        if members.size < 3:
            warnings.warn(f"class {c} has {members.size} member(s); all assigned to train",
                          ClassContrastWarning, stacklevel=2)
            continue
        members = rng.permutation(members)
        n_tr, n_va, _ = _largest_remainder(members.size, fr)
        roles[members[n_tr:n_tr + n_va]] = Role.VAL
        roles[members[n_tr + n_va:]] = Role.TEST
    return SplitAssignment(roles, seed)
