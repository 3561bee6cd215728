"""End-to-end runs: node classification with iterated refinement, link prediction,
homophily reports and the spatial/context ablation.

Every random stage of a run draws from its own seed, derived from the run
seed and a fixed stage tag, so stages reproduce independently.
"""

from __future__ import annotations

import configparser
import contextlib
import logging
import zlib
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .contextual import build_contextual_block, empty_contextual_block
from .datasets import (export_embeddings_csv, load_dataset, make_link_split, write_json)
from .errors import ClassContrastError, ConfigError, PipelineError
from .graph import Direction, Graph, NodeTable, Role, SplitAssignment, stratified_split
from .homophily import (contextual_homophily, edge_homophily, higher_homophily, homophily_matrix,
                        node_homophily, verify_theorem1, verify_theorem_b2)
from .mlp import (EvalReport, TrainConfig, auc, link_scores, predict_classes,
                  train_link_predictor, train_node_classifier)
from .recipes import DatasetRecipe, SpatialRow, auto_recipe, get_recipe
from .spatial import SpatialBlock, build_spatial_block

log = logging.getLogger(__name__)

MODES = ("both", "spatial", "context")
_MODE_ALIASES = {"both": "both", "spatial": "spatial", "spatialonly": "spatial",
                 "context": "context", "contextonly": "context"}


def sub_seed(seed: int, stage: str) -> int:
    """Seed for one stage of one run."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(stage.encode())])
    return int(ss.generate_state(1)[0])


def parse_seeds(text) -> tuple:
    """``"0-9"``, ``"1,4,7"`` or a mix such as ``"0-2,5"``."""
    if isinstance(text, (list, tuple, range)):
        return tuple(int(s) for s in text)
    seeds = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        try:
            seeds += list(range(int(lo), int(hi) + 1)) if sep else [int(lo)]
        except ValueError:
            raise ConfigError(f"cannot parse seeds {text!r}") from None
    return tuple(seeds)


def _parse_mode(mode):
    key = str(mode).lower().replace("_", "").replace("-", "")
    if key not in _MODE_ALIASES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {MODES}")
    return _MODE_ALIASES[key]


@dataclass(frozen=True)
class PipelineConfig:
    dataset: str | None = None
    recipe: str | None = None
    seeds: tuple = tuple(range(10))
    iterations: int = 2
    mode: str = "both"
    out: str | None = None
    directed: bool | None = None
    epochs: int | None = None
    hidden: tuple | None = None
    link_epochs: int | None = None
    hide_validation: bool = False
    write_embeddings: bool = True

    def __post_init__(self):
        object.__setattr__(self, "seeds", parse_seeds(self.seeds))
        object.__setattr__(self, "mode", _parse_mode(self.mode))
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if int(self.iterations) < 0:
            raise ConfigError(f"iterations must be >= 0, got {self.iterations}")
        object.__setattr__(self, "iterations", int(self.iterations))
        if self.hidden is not None:
            object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @classmethod
    def from_file(cls, path, **overrides):
        """Read ``key = value`` lines (``#`` comments); keys mirror the CLI flags."""
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        try:
            text = Path(path).read_text(encoding="utf-8")
            parser.read_string("[run]\n" + text)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        raw = dict(parser["run"])
        return cls.from_mapping({**raw, **{k: v for k, v in overrides.items() if v is not None}})

    @classmethod
    def from_mapping(cls, values):
        known = {f for f in cls.__dataclass_fields__}
        kw = {}
        for key, value in values.items():
            key = key.replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if isinstance(value, str):
                value = _coerce(key, value)
            kw[key] = value
        return cls(**kw)

    def node_train_config(self, seed):
        kw = {"seed": seed}
        if self.epochs is not None:
            kw["epochs"] = self.epochs
        if self.hidden is not None:
            kw["hidden"] = self.hidden
        return TrainConfig.node_defaults(**kw)

    def link_train_config(self, seed):
        kw = {"seed": seed}
        if self.link_epochs is not None:
            kw["epochs"] = self.link_epochs
        return TrainConfig.link_defaults(**kw)

    def to_dict(self):
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        if self.hidden is not None:
            d["hidden"] = list(self.hidden)
        return d


def _coerce(key, value):
    value = value.strip()
    try:
        if key in ("iterations", "epochs", "link_epochs"):
            return int(value)
        if key in ("directed", "hide_validation", "write_embeddings"):
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return value.lower() in ("true", "1", "yes")
        if key == "hidden":
            return tuple(int(h) for h in value.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    return value


@contextlib.contextmanager
def stage(name, seed):
    """Re-raise any failure inside the block as a PipelineError naming stage and seed."""
    try:
        yield
    except PipelineError:
        raise
    except (ClassContrastError, ValueError, ArithmeticError) as exc:
        raise PipelineError(name, seed, exc) from exc


# -- inputs ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Inputs:
    graph: Graph
    table: NodeTable
    recipe: DatasetRecipe
    name: str


def load_inputs(cfg: PipelineConfig, data=None) -> Inputs:
    """Load the dataset (or take ``data=(graph, table)``) and resolve the recipe."""
    recipe = get_recipe(cfg.recipe) if cfg.recipe else None
    if data is None:
        if not cfg.dataset:
            raise ConfigError("no dataset given")
        directed = cfg.directed if cfg.directed is not None else (
            recipe.directed if recipe else True)
        g, nt = load_dataset(cfg.dataset, directed=directed)
        name = Path(cfg.dataset).name
    else:
        g, nt = data
        name = cfg.dataset or "in-memory"
    if recipe is None:
        recipe = auto_recipe(g, nt)
    if recipe.class_count is not None and recipe.class_count != nt.class_count:
        raise ConfigError(f"recipe {recipe.name!r} expects {recipe.class_count} classes, "
                          f"dataset has {nt.class_count}")
    if recipe.directed and not g.directed:
        raise ConfigError(f"recipe {recipe.name!r} needs a directed graph")
    return Inputs(g, nt, recipe, name)


# -- embeddings -----------------------------------------------------------------

def assemble_embedding(spatial: SpatialBlock, contextual, mode="both", expected_dim=None):
    """Concatenate spatial then contextual blocks (or emit just one of them)."""
    mode = _parse_mode(mode)
    if spatial.values.shape[0] != contextual.values.shape[0]:
        raise ConfigError(f"spatial block has {spatial.values.shape[0]} rows, "
                          f"contextual block {contextual.values.shape[0]}")
    parts = {"spatial": [spatial.values], "context": [contextual.values],
             "both": [spatial.values, contextual.values]}[mode]
    emb = np.hstack(parts)
    if expected_dim is not None and emb.shape[1] != expected_dim:
        raise ConfigError(f"embedding has {emb.shape[1]} dims but the recipe expects {expected_dim}")
    return emb


def _iteration_embedding(inp, split, contextual, mode, t, prediction, hidden_roles):
    nt, recipe = inp.table, inp.recipe
    if mode == "context":
        return assemble_embedding(SpatialBlock((), np.zeros((nt.node_count, 0)), False,
                                               nt.class_count), contextual, mode,
                                  recipe.context_width(nt.class_count))
    spatial = build_spatial_block(inp.graph, nt, split, recipe,
                                  prediction_map=prediction if t > 0 else None,
                                  hidden_roles=hidden_roles)
    ctx = contextual if t >= recipe.context_from_iteration else empty_contextual_block(nt.node_count)
    return assemble_embedding(spatial, ctx, mode, recipe.width(nt.class_count, t, mode))


# -- node classification --------------------------------------------------------

@dataclass
class SeedResult:
    seed: int
    val: list = field(default_factory=list)
    test: list = field(default_factory=list)
    predictions: list = field(default_factory=list)
    embeddings: list = field(default_factory=list)
    models: list = field(default_factory=list)
    context_train: np.ndarray | None = None


def run_seed(inp: Inputs, split: SplitAssignment, cfg: PipelineConfig, seed: int) -> SeedResult:
    """Build γ0, train, predict P0, then refine ``cfg.iterations`` times.

    Labels of test nodes (and validation nodes when ``hide_validation``)
    are masked before any stage sees them; they are read back only to
    score the final predictions.
    """
    nt = inp.table
    hidden_roles = (Role.TEST, Role.VAL) if cfg.hide_validation else (Role.TEST,)
    train_labels = np.where(split.mask(Role.TEST), -1, nt.labels)
    res = SeedResult(seed)
    with stage("contextual", seed):
        contextual = build_contextual_block(nt, split, inp.recipe) \
            if cfg.mode != "spatial" else empty_contextual_block(nt.node_count)
    res.context_train = contextual.values[split.train].copy()
    iterations = 0 if cfg.mode == "context" else cfg.iterations
    prediction = None
    for t in range(iterations + 1):
        with stage(f"embed{t}", seed):
            emb = _iteration_embedding(inp, split, contextual, cfg.mode,
                                       t, prediction, hidden_roles)
        with stage(f"train{t}", seed):
            model, _ = train_node_classifier(emb, train_labels, split,
                                             cfg.node_train_config(sub_seed(seed, f"train{t}")),
                                             class_count=nt.class_count)
        with stage(f"predict{t}", seed):
            prediction, _ = predict_classes(model, emb)
        res.val.append(float(np.mean(prediction[split.val] == nt.labels[split.val]))
                       if split.val.size else float("nan"))
        res.test.append(float(np.mean(prediction[split.test] == nt.labels[split.test]))
                        if split.test.size else float("nan"))
        res.predictions.append(prediction)
        res.embeddings.append(emb)
        res.models.append(model)
    return res


def node_report(results):
    names = [f"P{t}" for t in range(len(results[0].test))]
    report = EvalReport("accuracy", [r.seed for r in results], [],
                        {n: [r.test[i] for r in results] for i, n in enumerate(names)},
                        {n: [r.val[i] for r in results] for i, n in enumerate(names)})
    # headline: best mean test accuracy among the refined rounds
    candidates = names[1:] if len(names) > 1 else names
    best = max(candidates, key=lambda n: (np.mean(report.iterations[n]), -names.index(n)))
    report.headline = best
    report.per_seed = list(report.iterations[best])
    return report


def run_transductive(cfg: PipelineConfig, data=None, inputs: Inputs | None = None):
    """Node classification over every seed. Returns ``(EvalReport, [SeedResult])``."""
    inp = inputs or load_inputs(cfg, data)
    results = []
    for seed in cfg.seeds:
        with stage("split", seed):
            split = stratified_split(inp.table, seed=sub_seed(seed, "split"))
        res = run_seed(inp, split, cfg, seed)
        log.info("seed %d: val %s test %s", seed, res.val, res.test)
        results.append(res)
    report = node_report(results)
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        if cfg.write_embeddings:
            for res in results:
                for t, emb in enumerate(res.embeddings):
                    export_embeddings_csv(out / f"embeddings_{res.seed}_{t}.csv", emb,
                                          inp.table.node_ids)
        write_json(out / "metrics.json", metrics_document("classify", cfg, inp, report))
    return report, results


def metrics_document(task, cfg, inp, report):
    return {"task": task, "dataset": inp.name, "recipe": inp.recipe.name, "mode": cfg.mode,
            "iterations": cfg.iterations, "config": cfg.to_dict(), "report": report.to_dict()}


# -- link prediction ------------------------------------------------------------

def link_embedding(g, nt, recipe, mode="both"):
    """All-labels-visible embedding of ``g`` (the training graph in a link run)."""
    mode = _parse_mode(mode)
    spatial = build_spatial_block(g, nt, None, recipe) if mode != "context" else \
        SpatialBlock((), np.zeros((nt.node_count, 0)), False, nt.class_count)
    contextual = build_contextual_block(nt, None, recipe) if mode != "spatial" else \
        empty_contextual_block(nt.node_count)
    return assemble_embedding(spatial, contextual, mode, recipe.width(nt.class_count, 1, mode))


def run_link_prediction(cfg: PipelineConfig, data=None, inputs: Inputs | None = None,
                        embed_fn=None):
    """Test AUC per seed. Spatial rows only see training-positive edges.

    ``embed_fn(train_graph, table, seed)`` replaces the embedding step.
    """
    inp = inputs or load_inputs(cfg, data)
    scores = []
    for seed in cfg.seeds:
        with stage("linksplit", seed):
            ls = make_link_split(inp.graph, seed=sub_seed(seed, "linksplit"))
        with stage("embed", seed):
            tg = ls.training_graph(inp.graph)
            emb = embed_fn(tg, inp.table, seed) if embed_fn else \
                link_embedding(tg, inp.table, inp.recipe, cfg.mode)
        with stage("train", seed):
            model, _ = train_link_predictor(emb, ls, cfg.link_train_config(sub_seed(seed, "link")))
        with stage("evaluate", seed):
            pairs = np.vstack([ls.test_pos, ls.test_neg])
            y = np.r_[np.ones(len(ls.test_pos)), np.zeros(len(ls.test_neg))]
            scores.append(auc(link_scores(model, emb, pairs), y))
        log.info("seed %d: test AUC %.4f", seed, scores[-1])
    report = EvalReport("auc", list(cfg.seeds), scores, headline="test")
    if cfg.out:
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        write_json(Path(cfg.out) / "metrics.json", metrics_document("linkpred", cfg, inp, report))
    return report


# -- homophily ------------------------------------------------------------------

def homophily_document(inp: Inputs) -> dict:
    g, nt, recipe = inp.graph, inp.table, inp.recipe
    rows = [SpatialRow(1), SpatialRow(2)] + [r for r in recipe.spatial_rows if not r.weight_mode]
    seen, matrices = set(), []
    spatial_recipe = DatasetRecipe(recipe.name, g.directed, ())
    for r in rows:
        if r.name in seen or (r.direction is not Direction.ANY and not g.directed):
            continue
        seen.add(r.name)
        block = build_spatial_block(g, nt, None, replace(spatial_recipe, spatial_rows=(r,)))
        matrices.append(homophily_matrix(block.values, nt.labels, nt.class_count,
                                         "similarity", r.name))
    contextual = build_contextual_block(nt, None, replace(recipe, pca_dim=None))
    scalars = {"node_homophily": node_homophily(g, nt.labels),
               "edge_homophily": edge_homophily(g, nt.labels),
               "higher_homophily": higher_homophily(g, nt.labels)}
    for i, (name, sem) in enumerate(zip(contextual.rows, contextual.semantics)):
        values = contextual.row_values(i)
        m = homophily_matrix(values, nt.labels, nt.class_count, sem, name)
        matrices.append(m)
        sim = 1.0 / (1.0 + values) if sem == "distance" else values
        scalars[f"contextual_homophily[{name}]"] = contextual_homophily(sim, nt.labels)
    return {
        "dataset": inp.name,
        "recipe": recipe.name,
        "class_order": list(nt.class_names),
        "matrices": [m.report(nt.class_names) for m in matrices],
        "scalars": {k: _finite(v) for k, v in scalars.items()},
        "theorems": {"theorem1_residual": verify_theorem1(g, nt.labels),
                     "theorem_b2_residual": verify_theorem_b2(g, nt.labels)},
    }


def _finite(x):
    return None if x is None or not np.isfinite(x) else float(x)


def run_homophily_report(cfg: PipelineConfig, data=None, inputs: Inputs | None = None) -> dict:
    inp = inputs or load_inputs(cfg, data)
    doc = homophily_document(inp)
    if cfg.out:
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        write_json(Path(cfg.out) / "homophily.json", doc)
    return doc


# -- ablation -------------------------------------------------------------------

def run_ablation(cfg: PipelineConfig, data=None, inputs: Inputs | None = None) -> dict:
    """Node-classification reports for spatial-only, context-only and both."""
    inp = inputs or load_inputs(cfg, data)
    reports = {}
    for mode in MODES:
        sub = replace(cfg, mode=mode, out=None)
        reports[mode] = run_transductive(sub, inputs=inp)[0]
    if cfg.out:
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        doc = {"task": "ablation", "dataset": inp.name, "recipe": inp.recipe.name,
               "config": cfg.to_dict(), "modes": {m: r.to_dict() for m, r in reports.items()}}
        write_json(Path(cfg.out) / "metrics.json", doc)
    return reports

