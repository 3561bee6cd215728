"""Class landmarks, contextual vectors and PCA reduction of raw features."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .errors import ClassContrastWarning, ConfigError, DataError
from .graph import NodeTable
from .recipes import LandmarkSpec

SIMILARITY_MEASURES = ("cosine", "common", "jaccard")
DENSE_EIGH_MAX_DIM = 2000


@dataclass(frozen=True, eq=False)
class Landmark:
    class_index: int
    kind: str
    vector: np.ndarray
    measure: str
    threshold: float | None = None

    @property
    def semantics(self):
        return "similarity" if self.measure in SIMILARITY_MEASURES else "distance"


def _member_rows(nt, split, c):
    members = np.flatnonzero(nt.labels == c)
    if split is not None:
        members = np.intersect1d(members, split.train)
    return members


def _landmark_vector(rows, kind, threshold):
    if kind == "centroid":
        return rows.mean(axis=0)
    counts = (rows > 0).sum(axis=0)
    if kind == "inclusive":
        return (counts > 0).astype(np.float64)
    return (counts >= threshold * rows.shape[0] - 1e-12).astype(np.float64)


def compute_landmarks(nt: NodeTable, split=None, kind="centroid", measure=None,
                      threshold=0.10) -> list:
    """One landmark per class, fitted on training members only (all nodes if ``split`` is None).

    ``centroid`` is the mean feature row, ``inclusive`` marks attributes
    present in any member, ``selective`` those present in at least
    ``threshold`` of the members.
    """
    if measure is None:
        measure = "euclidean" if kind == "centroid" else "common"
    spec = LandmarkSpec(kind, measure, threshold)
    out = []
    for c in range(nt.class_count):
        rows = nt.features[_member_rows(nt, split, c)]
        if rows.shape[0] == 0:
            raise DataError(f"class {c} has no training members to fit a landmark")
        out.append(Landmark(c, spec.kind, _landmark_vector(rows, kind, threshold),
                            spec.measure, threshold if kind == "selective" else None))
    return out


def measure_matrix(x, marks, measure):
    """Pairwise measure between rows of ``x`` (m, n) and rows of ``marks`` (N, n)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    marks = np.atleast_2d(np.asarray(marks, dtype=np.float64))
    if measure == "euclidean":
        sq = (x * x).sum(1)[:, None] - 2 * x @ marks.T + (marks * marks).sum(1)[None, :]
        return np.sqrt(np.maximum(sq, 0.0))
    if measure == "cosine":
        nx_, nm = np.linalg.norm(x, axis=1), np.linalg.norm(marks, axis=1)
        if np.any(nx_ == 0) or np.any(nm == 0):
            warnings.warn("zero vector under cosine; similarity set to 0",
                          ClassContrastWarning, stacklevel=3)
        denom = np.outer(nx_, nm)
        return np.divide(x @ marks.T, denom, out=np.zeros(denom.shape), where=denom > 0)
    bx, bm = (x > 0).astype(np.float64), (marks > 0).astype(np.float64)
    common = bx @ bm.T
    if measure == "common":
        return common
    if measure == "jaccard":
        union = bx.sum(1)[:, None] + bm.sum(1)[None, :] - common
        return np.divide(common, union, out=np.zeros(union.shape), where=union > 0)
    raise ConfigError(f"unknown measure {measure!r}")


def contextual_vector(x, landmarks) -> np.ndarray:
    """Measure from one feature row to each class landmark."""
    measures = {lm.measure for lm in landmarks}
    if len(measures) != 1:
        raise ConfigError("landmarks of one contextual vector must share a measure")
    marks = np.vstack([lm.vector for lm in landmarks])
    return measure_matrix(x, marks, measures.pop())[0]


def contextual_matrix(features, landmarks):
    marks = np.vstack([lm.vector for lm in landmarks])
    return measure_matrix(features, marks, landmarks[0].measure)


def _leave_one_out(nt, split, spec, values):
    """Recompute each training node's own-class entry with that node left out of its landmark."""
    train = np.arange(nt.node_count) if split is None else split.train
    x = nt.features
    for c in range(nt.class_count):
        rows = np.intersect1d(_member_rows(nt, split, c), train)
        if rows.size < 2:
            continue
        member = x[rows]
        if spec.kind == "centroid":
            marks = (member.sum(0)[None, :] - member) / (rows.size - 1)
        else:
            counts = (member > 0).sum(0)[None, :] - (member > 0)
            if spec.kind == "inclusive":
                marks = (counts > 0).astype(np.float64)
            else:
                marks = (counts >= spec.threshold * (rows.size - 1) - 1e-12).astype(np.float64)
        values[rows, c] = [measure_matrix(member[i], marks[i], spec.measure)[0, 0]
                           for i in range(rows.size)]
    return values


# -- PCA ------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PCABasis:
    mean: np.ndarray
    components: np.ndarray  # (target_dim, n)
    eigenvalues: np.ndarray

    def transform(self, features):
        return (np.asarray(features, dtype=np.float64) - self.mean) @ self.components.T


def pca_reduce(features, target_dim, fit_rows=None, rank_tol=1e-10):
    """Project onto the top ``target_dim`` principal components of the fit rows.

    Components are ordered by decreasing eigenvalue and sign-fixed so their
    largest-magnitude coordinate is positive. Directions beyond the
    numerical rank come back as zero columns (with a warning).

    Returns ``(reduced, basis)``.
    """
    x = np.asarray(features, dtype=np.float64)
    n = x.shape[1]
    if not 1 <= target_dim <= n:
        raise ValueError(f"target_dim must be in [1, {n}], got {target_dim}")
    fit = x if fit_rows is None else x[fit_rows]
    mean = fit.mean(axis=0)
    centered = fit - mean
    cov = centered.T @ centered / max(fit.shape[0] - 1, 1)
    if n <= DENSE_EIGH_MAX_DIM or target_dim >= n - 1:
        vals, vecs = np.linalg.eigh(cov)
    else:
        v0 = np.ones(n) / np.sqrt(n)
        vals, vecs = spla.eigsh(cov, k=target_dim, which="LA", tol=rank_tol, v0=v0)
    order = np.argsort(vals)[::-1][:target_dim]
    vals, vecs = vals[order], vecs[:, order].T.copy()
    top = max(vals[0], 0.0) if vals.size else 0.0
    deficient = vals <= rank_tol * max(top, 1.0)
    if deficient.any():
        warnings.warn(f"{int(deficient.sum())} component(s) beyond numerical rank zero-padded",
                      ClassContrastWarning, stacklevel=2)
        vecs[deficient] = 0.0
        vals = np.where(deficient, 0.0, vals)
    pivot = np.argmax(np.abs(vecs), axis=1)
    signs = np.sign(vecs[np.arange(vecs.shape[0]), pivot])
    signs[signs == 0] = 1.0
    vecs *= signs[:, None]
    basis = PCABasis(mean, vecs, vals)
    return basis.transform(x), basis


# -- blocks ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ContextualBlock:
    """Contextual rows for all nodes; ``semantics`` is per row: distance, similarity or raw."""

    rows: tuple
    values: np.ndarray
    semantics: tuple
    widths: tuple

    @property
    def column_names(self):
        names = []
        for name, w in zip(self.rows, self.widths):
            names += [f"{name}[{j}]" for j in range(w)]
        return names

    def row_values(self, i):
        start = sum(self.widths[:i])
        return self.values[:, start:start + self.widths[i]]


def empty_contextual_block(node_count):
    return ContextualBlock((), np.zeros((node_count, 0)), (), ())


def build_contextual_block(nt: NodeTable, split, recipe) -> ContextualBlock:
    """Landmark rows of ``recipe`` (plus a PCA block if configured), fitted on training nodes."""
    names, blocks, sem, widths = [], [], [], []
    for spec in recipe.landmarks:
        marks = compute_landmarks(nt, split, spec.kind, spec.measure, spec.threshold)
        values = contextual_matrix(nt.features, marks)
        if recipe.leave_one_out:
            values = _leave_one_out(nt, split, spec, values)
        names.append(spec.name)
        blocks.append(values)
        sem.append(marks[0].semantics)
        widths.append(nt.class_count)
    if recipe.pca_dim:
        reduced, _ = pca_reduce(nt.features, recipe.pca_dim,
                                None if split is None else split.train)
        names.append(f"pca{recipe.pca_dim}")
        blocks.append(reduced)
        sem.append("raw")
        widths.append(recipe.pca_dim)
    if not blocks:
        return empty_contextual_block(nt.node_count)
    return ContextualBlock(tuple(names), np.hstack(blocks), tuple(sem), tuple(widths))
