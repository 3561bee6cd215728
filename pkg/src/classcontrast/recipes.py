"""Per-dataset embedding recipes: which spatial rows and contextual blocks to build."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError
from .graph import MAX_HOPS, Direction

WEIGHT_MODES = (None, "sum", "reciprocal")
LANDMARK_KINDS = ("centroid", "inclusive", "selective")
MEASURES = ("euclidean", "cosine", "common", "jaccard")


@dataclass(frozen=True)
class SpatialRow:
    """One spatial row: class counts over a k-hop neighborhood."""

    hops: int
    direction: Direction = Direction.ANY
    exact: bool = False
    weight_mode: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        if not 1 <= self.hops <= MAX_HOPS:
            raise ConfigError(f"hops must be in [1, {MAX_HOPS}], got {self.hops}")
        if self.weight_mode not in WEIGHT_MODES:
            raise ConfigError(f"unknown weight mode {self.weight_mode!r}")

    @property
    def name(self):
        tag = f"spatial{self.hops}{'' if self.direction is Direction.ANY else self.direction.value}"
        if self.exact:
            tag += "x"
        if self.weight_mode:
            tag += f"-w{self.weight_mode}"
        return tag


@dataclass(frozen=True)
class LandmarkSpec:
    """One landmark set and the measure that pairs with it."""

    kind: str
    measure: str
    threshold: float = 0.10

    def __post_init__(self):
        if self.kind not in LANDMARK_KINDS:
            raise ConfigError(f"unknown landmark kind {self.kind!r}")
        if self.measure not in MEASURES:
            raise ConfigError(f"unknown measure {self.measure!r}")
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigError("selective threshold must be in (0, 1]")

    @property
    def name(self):
        if self.kind == "selective":
            return f"context-{self.kind}{self.threshold:g}-{self.measure}"
        return f"context-{self.kind}-{self.measure}"


@dataclass(frozen=True)
class DatasetRecipe:
    """How to build the embedding for one dataset.

    ``pca_dim`` adds the PCA-reduced raw features as a contextual block.
    ``context_from_iteration`` delays all contextual blocks until that
    refinement round. ``expected_dim`` is the width from round 1 on and is
    checked against the configured blocks when ``class_count`` is known.
    """

    name: str
    directed: bool
    spatial_rows: tuple = ()
    landmarks: tuple = ()
    pca_dim: int | None = None
    context_from_iteration: int = 0
    class_count: int | None = None
    expected_dim: int | None = None
    leave_one_out: bool = False
    notes: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "spatial_rows", tuple(self.spatial_rows))
        object.__setattr__(self, "landmarks", tuple(self.landmarks))
        if not self.directed and any(r.direction is not Direction.ANY for r in self.spatial_rows):
            raise ConfigError(f"recipe {self.name!r}: directional rows need a directed graph")
        if self.expected_dim is not None and self.class_count is not None:
            got = self.width(self.class_count)
            if got != self.expected_dim:
                raise ConfigError(
                    f"recipe {self.name!r}: blocks sum to {got} dims, expected {self.expected_dim}")

    def spatial_width(self, class_count, transductive=False):
        return len(self.spatial_rows) * (class_count + int(transductive))

    def context_width(self, class_count):
        return len(self.landmarks) * class_count + (self.pca_dim or 0)

    def width(self, class_count, iteration=1, mode="both"):
        """Embedding width at a refinement round (round 0 carries the unknown column)."""
        s = self.spatial_width(class_count, transductive=iteration == 0)
        c = self.context_width(class_count) if iteration >= self.context_from_iteration else 0
        return {"both": s + c, "spatial": s, "context": self.context_width(class_count)}[mode]


_DIRECTED_ROWS = (
    SpatialRow(1, Direction.INCOMING),
    SpatialRow(1, Direction.OUTGOING),
    SpatialRow(2, Direction.INCOMING),
    SpatialRow(2, Direction.OUTGOING),
)
_UNDIRECTED_ROWS = (SpatialRow(1), SpatialRow(2))
_BINARY_LANDMARKS = (
    LandmarkSpec("inclusive", "common"),
    LandmarkSpec("selective", "common", 0.10),
)


def _directed_binary(name, n_cls, dim):
    return DatasetRecipe(name, True, _DIRECTED_ROWS, _BINARY_LANDMARKS,
                         class_count=n_cls, expected_dim=dim)


BUNDLED = {
    "cora": _directed_binary("cora", 7, 42),
    "citeseer": _directed_binary("citeseer", 6, 36),
    "pubmed": DatasetRecipe("pubmed", True, _DIRECTED_ROWS, (), pca_dim=100,
                            context_from_iteration=1, class_count=3, expected_dim=112),
    "texas": _directed_binary("texas", 5, 30),
    "cornell": _directed_binary("cornell", 5, 30),
    "wisconsin": _directed_binary("wisconsin", 5, 30),
    "chameleon": DatasetRecipe("chameleon", False, _UNDIRECTED_ROWS, _BINARY_LANDMARKS,
                               class_count=5, expected_dim=20),
    "squirrel": DatasetRecipe("squirrel", False, _UNDIRECTED_ROWS, _BINARY_LANDMARKS,
                              class_count=5, expected_dim=20),
}


def get_recipe(name):
    try:
        return BUNDLED[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown recipe {name!r}; bundled: {sorted(BUNDLED)}") from None


def auto_recipe(g, nt, name="auto"):
    """Default recipe for an arbitrary dataset, following the bundled ones."""
    rows = _DIRECTED_ROWS if g.directed else _UNDIRECTED_ROWS
    if nt.feature_kind == "binary":
        marks = _BINARY_LANDMARKS
    else:
        marks = (LandmarkSpec("centroid", "euclidean"),)
    return DatasetRecipe(name, g.directed, rows, marks, class_count=nt.class_count)
