"""Class-aware homophily matrices, classical homophily scores and theorem checks."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ClassContrastWarning, ConfigError
from .graph import Direction, Graph, neighborhood_matrix
from .spatial import spatial_matrix


@dataclass(frozen=True, eq=False)
class HomophilyMatrix:
    """Row ``i`` holds the class-``i`` average of L1-normalized embedding rows."""

    values: np.ndarray
    source: str
    included_counts: tuple
    excluded_nodes: int
    conversion: str | None = None

    @property
    def ratio(self):
        return alpha_homophily_ratio(self)

    def report(self, class_order):
        """JSON-ready dict; NaN markers become ``null``."""
        def clean(x):
            return None if math.isnan(x) else float(x)

        return {
            "matrix_name": self.source,
            "class_order": list(class_order),
            "values": [[clean(x) for x in row] for row in self.values.tolist()],
            "ratio": clean(self.ratio),
            "excluded_nodes": int(self.excluded_nodes),
            "conversion": self.conversion,
        }


def homophily_matrix(values, labels, class_count=None, semantics="similarity", source="block"):
    """Average, per true class, of each node's row divided by its L1 mass.

    Rows with zero mass are left out of their class average. A class left
    with no contributing rows gets a NaN row and a warning. Distance rows
    are first mapped through ``1 / (1 + d)``.
    """
    x = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels)
    n_cls = int(labels.max()) + 1 if class_count is None else class_count
    conversion = None
    if semantics == "distance":
        x = 1.0 / (1.0 + x)
        conversion = "1/(1+d)"
    elif semantics == "raw":
        raise ConfigError("raw feature blocks have no class coordinates")
    if np.any(x < 0):
        raise ConfigError("homophily matrices need non-negative rows")
    mass = x.sum(axis=1)
    keep = mass > 0
    norm = np.zeros_like(x)
    norm[keep] = x[keep] / mass[keep, None]
    out = np.full((n_cls, x.shape[1]), np.nan)
    counts = []
    for c in range(n_cls):
        rows = keep & (labels == c)
        counts.append(int(rows.sum()))
        if rows.any():
            out[c] = norm[rows].mean(axis=0)
        else:
            warnings.warn(f"class {c}: every member has zero mass; row marked NaN",
                          ClassContrastWarning, stacklevel=2)
    return HomophilyMatrix(out, source, tuple(counts), int((~keep).sum()), conversion)


def alpha_homophily_ratio(m) -> float:
    """Mean of the diagonal (NaN propagates)."""
    vals = m.values if isinstance(m, HomophilyMatrix) else np.asarray(m)
    n = min(vals.shape)
    return float(np.mean(np.diag(vals)[:n]))


def _same_class_fraction(reach, labels):
    deg = np.asarray(reach.sum(axis=1)).ravel()
    src, dst = reach.nonzero()
    same = np.bincount(src, weights=(labels[src] == labels[dst]).astype(float),
                       minlength=reach.shape[0])
    keep = deg > 0
    return same[keep] / deg[keep]


def node_homophily(g: Graph, labels) -> float:
    """Mean same-class fraction of each node's neighbors, edge direction ignored.

    Degree-0 nodes are skipped.
    """
    frac = _same_class_fraction(neighborhood_matrix(g, 1, Direction.ANY), np.asarray(labels))
    return float(frac.mean()) if frac.size else float("nan")


def edge_homophily(g: Graph, labels) -> float:
    """Fraction of edges joining same-class endpoints; a pair linked both ways counts once."""
    labels = np.asarray(labels)
    src, dst, _ = g.undirected().edges()
    if src.size == 0:
        return float("nan")
    return float(np.mean(labels[src] == labels[dst]))


def higher_homophily(g: Graph, labels) -> float:
    """Mean same-class fraction over 2-hop neighborhoods (nodes with empty ones skipped)."""
    frac = _same_class_fraction(neighborhood_matrix(g, 2, Direction.ANY), np.asarray(labels))
    return float(frac.mean()) if frac.size else float("nan")


def _off_class_share(values, labels):
    x = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels)
    mass = x.sum(axis=1)
    keep = mass > 0
    own = x[np.arange(x.shape[0]), labels]
    return (mass[keep] - own[keep]) / mass[keep], int((~keep).sum())


def contextual_homophily(beta, labels) -> float:
    """One minus the mean off-class share of each node's contextual row."""
    share, dropped = _off_class_share(beta, labels)
    if dropped:
        warnings.warn(f"{dropped} zero-mass contextual row(s) excluded",
                      ClassContrastWarning, stacklevel=2)
    return float(1.0 - share.mean()) if share.size else float("nan")


def _theorem_residual(g, labels, hops, score):
    labels = np.asarray(labels)
    alpha = spatial_matrix(g, labels, hops, Direction.ANY, class_count=int(labels.max()) + 1)
    share, _ = _off_class_share(alpha, labels)
    return abs((1.0 - score) - float(share.mean())) if share.size else 0.0


def verify_theorem1(g: Graph, labels) -> float:
    """|(1 - node homophily) - mean off-class share of the 1-hop spatial row|."""
    return _theorem_residual(g, labels, 1, node_homophily(g, labels))


def verify_theorem_b2(g: Graph, labels) -> float:
    """Same identity for 2-hop neighborhoods and higher homophily."""
    return _theorem_residual(g, labels, 2, higher_homophily(g, labels))
