"""Command-line entry point.

Exit status is 0 on success, 2 for configuration errors, 3 for data
errors and 1 for anything else (such as diverged training).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .contextual import build_contextual_block, empty_contextual_block
from .datasets import export_embeddings_csv
from .errors import ClassContrastError, ConfigError, DataError, PipelineError
from .graph import stratified_split
from .pipeline import (PipelineConfig, assemble_embedding, load_inputs, run_ablation,
                       run_homophily_report, run_link_prediction, run_transductive, sub_seed)
from .spatial import build_spatial_block

COMMANDS = ("embed", "classify", "linkpred", "homophily", "ablation")


def build_parser():
    p = argparse.ArgumentParser(prog="classcontrast",
                                description="Class-contrast node embeddings, homophily and MLP evaluation.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key = value file; command-line flags override it")
    p.add_argument("--dataset", help="dataset directory")
    p.add_argument("--recipe", help="bundled recipe name (default: derived from the data)")
    p.add_argument("--seeds", help="e.g. 0-9 or 0,3,5 (default 0-9)")
    p.add_argument("--iterations", type=int, help="refinement rounds T (default 2; embed: 0)")
    p.add_argument("--mode", help="both, spatial or context (default both)")
    p.add_argument("--out", help="output directory (default: current directory)")
    p.add_argument("--epochs", type=int, help="node-task epochs (default 500)")
    p.add_argument("--link-epochs", type=int, help="link-task epochs (default 100)")
    p.add_argument("--hidden", help="hidden widths, e.g. 700 or 700,700")
    p.add_argument("--directed", choices=("true", "false"), help="override graph directedness")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _config(args):
    flags = {"dataset": args.dataset, "recipe": args.recipe, "seeds": args.seeds,
             "iterations": args.iterations, "mode": args.mode, "out": args.out,
             "epochs": args.epochs, "link_epochs": args.link_epochs, "hidden": args.hidden,
             "directed": args.directed}
    flags = {k: v for k, v in flags.items() if v is not None}
    if args.command == "embed" and "iterations" not in flags:
        flags["iterations"] = 0
    if args.config:
        cfg = PipelineConfig.from_file(args.config, **{k: str(v) for k, v in flags.items()})
    else:
        cfg = PipelineConfig.from_mapping({k: str(v) for k, v in flags.items()})
    if cfg.out is None:
        cfg = replace(cfg, out=".")
    return cfg


def _fmt(values):
    return f"{np.mean(values):.4f} ± {np.std(values):.4f}"


def _embed(cfg):
    inp = load_inputs(cfg)
    if cfg.iterations > 0:
        run_transductive(cfg, inputs=inp)
        return f"wrote embeddings for rounds 0-{cfg.iterations} of {len(cfg.seeds)} seed(s)"
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    nt = inp.table
    for seed in cfg.seeds:
        split = stratified_split(nt, seed=sub_seed(seed, "split"))
        spatial = build_spatial_block(inp.graph, nt, split, inp.recipe)
        ctx = build_contextual_block(nt, split, inp.recipe)
        if inp.recipe.context_from_iteration > 0:
            ctx = empty_contextual_block(nt.node_count)
        emb = assemble_embedding(spatial, ctx, cfg.mode,
                                 inp.recipe.width(nt.class_count, 0, cfg.mode))
        export_embeddings_csv(out / f"embeddings_{seed}_0.csv", emb, nt.node_ids)
    return f"wrote round-0 embeddings for {len(cfg.seeds)} seed(s) to {out}"


def _classify(cfg):
    report, _ = run_transductive(cfg)
    lines = [f"{name} test accuracy {_fmt(vals)}" for name, vals in report.iterations.items()]
    lines.append(f"headline ({report.headline}): {report.mean:.4f} ± {report.std:.4f}")
    return "\n".join(lines)


def _linkpred(cfg):
    report = run_link_prediction(cfg)
    return f"test AUC {report.mean:.4f} ± {report.std:.4f} over {len(report.seeds)} seed(s)"


def _homophily(cfg):
    doc = run_homophily_report(cfg)
    lines = [f"{m['matrix_name']}: ratio {m['ratio']}" for m in doc["matrices"]]
    lines += [f"{k}: {v}" for k, v in doc["scalars"].items()]
    return "\n".join(lines)


def _ablation(cfg):
    reports = run_ablation(cfg)
    return "\n".join(f"{mode}: {r.mean:.4f} ± {r.std:.4f}" for mode, r in reports.items())


def _exit_code(exc):
    cause = exc.cause if isinstance(exc, PipelineError) else exc
    if isinstance(cause, ConfigError):
        return 2
    if isinstance(cause, (DataError, OSError)):
        return 3
    return 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    run = {"embed": _embed, "classify": _classify, "linkpred": _linkpred,
           "homophily": _homophily, "ablation": _ablation}[args.command]
    try:
        print(run(_config(args)))
    except (ClassContrastError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
