"""Command-line entry point: ``python -m crisisgraph <command> ...``.

Exit codes: 0 success, 1 usage/config error, 2 data or format error,
3 numeric failure (non-finite loss).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import config as C
from . import model as M
from . import synth as S
from .corpus import (CorpusFormatError, DataSplit, LabelMap, add_unlabeled, load_documents,
                     process, read_processed, split_dataset, write_processed)
from .embedding import EmbeddingFormatError, EmbeddingTable, batch_ids, load_word_vectors
from .graph import SimilarityGraph, load_id_map, sidecar_path
from .nn import CheckpointError, load_checkpoint, save_checkpoint
from .trainer import (NumericError, budget_graph, evaluate, label_budget_sweep, train_semisupervised,
                      train_supervised)

log = logging.getLogger("crisisgraph")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------- data loading

def _require(path: Optional[str], what: str) -> str:
    if not path:
        raise UsageError(f"no {what} path given (set paths.{what} in the config)")
    return path


def _table(cfg: C.RunConfig) -> EmbeddingTable:
    table = load_word_vectors(_require(cfg.paths.embeddings, "embeddings"), seed=cfg.seed)
    if cfg.embedding.dim is not None and cfg.embedding.dim != table.d:
        raise DataError(f"embedding.dim = {cfg.embedding.dim} but "
                        f"{cfg.paths.embeddings} has dimension {table.d}")
    return table


def _split(cfg: C.RunConfig, label_map: Optional[LabelMap] = None) -> DataSplit:
    """Labeled file -> train/test/dev split, plus the unlabeled pool when configured."""
    docs, label_map = load_documents(_require(cfg.paths.labeled, "labeled"), True, label_map)
    tweets = [process(d, label_map) for d in docs]
    split = split_dataset(tweets, cfg.corpus.ratios, seed=cfg.corpus.split_seed)
    split.label_map = label_map
    if cfg.paths.unlabeled:
        unl, _ = read_processed(cfg.paths.unlabeled, labeled=False)
        split = add_unlabeled(split, unl, cfg.corpus.unlabeled_cap)
    return split


def _graph_for(cfg: C.RunConfig, split: DataSplit, table: EmbeddingTable) -> SimilarityGraph:
    if not cfg.paths.graph:
        return budget_graph(split, table, cfg.graph.k)
    graph = SimilarityGraph.load(cfg.paths.graph)
    side = sidecar_path(cfg.paths.graph)
    if side.exists():
        ids = load_id_map(cfg.paths.graph)
        if ids != [t.id for t in split.train]:
            raise DataError(f"{side}: node ids do not match the training split order")
    if graph.n != split.n:
        raise DataError(f"graph has {graph.n} nodes, training split has {split.n}")
    return graph


def _checkpoint_meta(cfg: C.RunConfig, table: EmbeddingTable, label_map: LabelMap,
                     mc: M.ModelConfig, result) -> dict:
    return {
        "config_digest": cfg.model_digest(label_map.K),
        "vocab_hash": table.vocab_hash(),
        "labels": list(label_map.names),
        "model": mc.to_dict(),
        "seed": cfg.seed,
        "best_epoch": result.best_epoch,
        "best_dev_f1": result.best_dev_f1,
    }


def _load_model(cfg: C.RunConfig, table: EmbeddingTable):
    path = _require(cfg.paths.checkpoint, "checkpoint")
    tensors, meta = load_checkpoint(path)
    label_map = LabelMap(tuple(meta["labels"]))
    if meta["config_digest"] != cfg.model_digest(label_map.K):
        raise DataError(f"{path}: config digest mismatch (checkpoint {meta['config_digest']}, "
                        f"current {cfg.model_digest(label_map.K)})")
    if meta["vocab_hash"] != table.vocab_hash():
        raise DataError(f"{path}: embedding vocabulary differs from the one used in training")
    return tensors, M.ModelConfig(**meta["model"]), label_map


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------- commands

def cmd_preprocess(cfg: C.RunConfig, args) -> None:
    src = args.input or _require(cfg.paths.input, "input")
    out = args.out or cfg.paths.output
    tweets, label_map = read_processed(src, labeled=not args.unlabeled)
    if out is None:
        raise UsageError("preprocess needs --out")
    write_processed(out, tweets, label_map)
    if label_map is not None:
        label_map.save(f"{out}.labels")
    log.info("wrote %d tweets to %s", len(tweets), out)


def cmd_build_graph(cfg: C.RunConfig, args) -> None:
    out = args.out or _require(cfg.paths.graph, "graph")
    table = _table(cfg)
    split = _split(cfg)
    graph = budget_graph(split, table, cfg.graph.k)
    graph.save(out, [t.id for t in split.train])
    log.info("graph: %d nodes, k=%d -> %s", graph.n, graph.k, out)


def cmd_train(cfg: C.RunConfig, args) -> None:
    if args.out:
        cfg.paths.checkpoint = args.out
    ckpt = _require(cfg.paths.checkpoint, "checkpoint")
    table = _table(cfg)
    split = _split(cfg)
    mc = replace(cfg.model, K=split.label_map.K)
    if mc.mode == M.SEMI:
        result = train_semisupervised(split, _graph_for(cfg, split, table), table, mc,
                                      cfg.train_config(), cfg.sampler_config())
    else:
        result = train_supervised(split, table, mc, cfg.train_config())
    save_checkpoint(ckpt, result.params,
                    _checkpoint_meta(cfg, table, split.label_map, result.model_config, result))
    _write_text(cfg.paths.log or f"{ckpt}.log", result.log_text())
    log.info("best epoch %d, dev weighted F1 %.4f", result.best_epoch, result.best_dev_f1)


def cmd_evaluate(cfg: C.RunConfig, args) -> None:
    table = _table(cfg)
    params, mc, label_map = _load_model(cfg, table)
    src = args.input or cfg.paths.input
    if src:
        examples, _ = read_processed(src, labeled=True, label_map=label_map)
    else:
        split = _split(cfg, label_map)
        examples = split.dev if args.split == "dev" else split.test
    rep = evaluate(params, table, mc, examples)
    _write_text(args.out, rep.summary() + "\n")


def cmd_predict(cfg: C.RunConfig, args) -> None:
    table = _table(cfg)
    params, mc, label_map = _load_model(cfg, table)
    src = args.input or _require(cfg.paths.input, "input")
    tweets, _ = read_processed(src, labeled=False)
    E = params["E"] if "E" in params else table.vectors
    ids = batch_ids(tweets, table, mc.max_len)
    lines = []
    for s in range(0, len(tweets), 256):
        pred, probs = M.predict(ids[s:s + 256], params, E, mc)
        for t, c, p in zip(tweets[s:s + 256], pred, probs):
            lines.append(f"{t.id}\t{label_map.names[c]}\t{p[c]:.6f}\n")
    _write_text(args.out or cfg.paths.output, "".join(lines))


def table2(rows) -> str:
    """Pivot sweep rows into a modes x budgets F1 table (percent, two decimals)."""
    budgets = list(dict.fromkeys(r.budget for r in rows))
    modes = list(dict.fromkeys(r.mode for r in rows))
    f1 = {(r.budget, r.mode): r.report.weighted_f1 for r in rows}
    head = ["mode"] + [f"L={b}" for b in budgets]
    out = ["\t".join(head)]
    for m in modes:
        out.append("\t".join([m] + [f"{100 * f1[(b, m)]:.2f}" for b in budgets]))
    return "\n".join(out) + "\n"


def cmd_sweep(cfg: C.RunConfig, args) -> None:
    table = _table(cfg)
    split = _split(cfg)
    mc = replace(cfg.model, K=split.label_map.K)
    budgets = cfg.sweep.budget_list()
    modes = cfg.sweep.mode_list()
    for m in modes:
        if m not in (M.SUPERVISED, M.SEMI):
            raise UsageError(f"unknown sweep mode {m!r}")
    rows = label_budget_sweep(budgets, split, table, mc, cfg.train_config(),
                              cfg.sampler_config(), k=cfg.graph.k, modes=tuple(modes))
    _write_text(args.out or cfg.paths.output, "".join(r.line() + "\n" for r in rows))
    sys.stderr.write(table2(rows))


def cmd_synth(cfg: C.RunConfig, args) -> None:
    out = Path(args.out or cfg.paths.output or ".")
    out.mkdir(parents=True, exist_ok=True)
    spec = cfg.synth_spec()
    corpus = S.generate(spec)
    S.write(corpus, out / "labeled.tsv", out / "unlabeled.tsv" if spec.unlabeled else None,
            out / "embeddings.txt")
    log.info("synthetic corpus written to %s", out)


COMMANDS = {
    "preprocess": cmd_preprocess,
    "build-graph": cmd_build_graph,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
}


def make_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--seed", type=int, help="global seed (overrides the config)")
    common.add_argument("--out", help="output path")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="crisisgraph", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    p = sub.add_parser("preprocess", parents=[common], help="clean and tokenize a TSV corpus")
    p.add_argument("input", nargs="?")
    p.add_argument("--unlabeled", action="store_true", help="input is id<TAB>text")
    sub.add_parser("build-graph", parents=[common], help="k-NN graph over train + unlabeled")
    sub.add_parser("train", parents=[common], help="train a model, write checkpoint and log")
    p = sub.add_parser("evaluate", parents=[common], help="weighted P/R/F1 of a checkpoint")
    p.add_argument("input", nargs="?", help="labeled TSV (default: the test split)")
    p.add_argument("--split", choices=("test", "dev"), default="test")
    p = sub.add_parser("predict", parents=[common], help="label an id<TAB>text file")
    p.add_argument("input", nargs="?")
    sub.add_parser("sweep", parents=[common], help="label-budget sweep, both modes")
    sub.add_parser("synth", parents=[common], help="write a synthetic corpus and embeddings")
    return parser


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
        if not args.command:
            raise UsageError("a command is required: " + ", ".join(COMMANDS))
        overrides = list(args.set)
        if args.seed is not None:
            overrides.append(f"seed={args.seed}")
        cfg = C.load(args.config, overrides)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except C.ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_USAGE

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    np.seterr(over="ignore", under="ignore")
    try:
        COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except NumericError as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return EXIT_NUMERIC
    except (DataError, CorpusFormatError, EmbeddingFormatError, CheckpointError,
            OSError, KeyError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
