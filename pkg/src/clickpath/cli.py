"""Command-line surface: gen, ingest, embed, train, classify, predict,
eval-curve, patterns, stats, params-report.

Machine-readable results go to stdout as JSON; diagnostics go to stderr.
Exit codes: 0 success, 1 usage error, 2 data/validation error, 3
internal invariant violation. All randomness flows from --seed, and
rerunning a subcommand with identical argv and inputs produces
byte-identical JSON/CSV/DOT outputs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import traceback
from pathlib import Path

from . import apm, datasets, evaluation, figures, url2vec
from .errors import ClickpathError, EmptyDataset
from .events import Behavior
from .paths import ActionPath
from .patterns import build_graph, export_dot, find_overlaps, mine_patterns, PatternReport
from .synthgen import GenParams, gen_dataset
from .vocab import Vocabulary

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

_DEFAULT_FRACTIONS = "0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,0.99"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we reserve 2 for data
        raise _UsageError(message)


def _emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _diag(msg: str) -> None:
    sys.stderr.write(msg + "\n")


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(cfg, dict):
        raise _UsageError("--config file must hold a JSON object")
    return cfg


def _opt(args, cfg: dict, name: str, default):
    """Flag beats config file beats built-in default."""
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    if name in cfg:
        return cfg[name]
    return default


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="master RNG seed")
    p.add_argument("--config", default=None, help="JSON file with option defaults")
    p.add_argument("--out", default=None, help="primary output path")


def _build_parser() -> _Parser:
    parser = _Parser(prog="clickpath", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a labeled synthetic dataset")
    _add_common(p)
    p.add_argument("--classes", default=None, help="comma list from {trg,pur,exp}")
    p.add_argument("--counts", default=None, help="train,val,test sizes, e.g. 132,38,19")
    p.add_argument("--sites", type=int, default=None, help="number of synthetic hosts")

    p = sub.add_parser("ingest", help="validate and summarize a session log")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--tolerance-ms", type=int, default=None)
    p.add_argument("--paths-out", default=None, help="directory for ActionPath JSON files")
    p.add_argument("--vocab", default=None, help="existing vocabulary to map URLs")
    p.add_argument("--vocab-out", default=None, help="write the built vocabulary here")

    p = sub.add_parser("embed", help="train skip-gram URL embeddings")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--negatives", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--vocab-out", default=None)

    p = sub.add_parser("train", help="train the action path model")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--embeddings", default=None, help="embed output; trained inline if omitted")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--latent", type=int, default=None)
    p.add_argument("--embed-dim", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--l2", type=float, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--objective", choices=["classify", "mixed"], default=None)
    p.add_argument("--candidate-mode", choices=["paper", "standard"], default=None)
    p.add_argument("--loss-png", default=None)

    p = sub.add_parser("classify", help="classify a path or a dataset split")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--path", default=None, help="ActionPath JSON file")
    p.add_argument("--data", default=None)
    p.add_argument("--split", default=None)
    p.add_argument("--session", default=None)

    p = sub.add_parser("predict", help="greedy-decode a session suffix")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--path", default=None)
    p.add_argument("--data", default=None)
    p.add_argument("--session", default=None)
    p.add_argument("--fraction", type=float, default=None)
    p.add_argument("--max-len", type=int, default=None)

    p = sub.add_parser("eval-curve", help="accuracy vs observed fraction")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default=None)
    p.add_argument("--fractions", default=None)
    p.add_argument("--png", default=None)

    p = sub.add_parser("patterns", help="mine browsing patterns from sessions")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--session", default=None)
    p.add_argument("--sessions", default=None, help="comma list for a multi-user overlay")
    p.add_argument("--min-cluster-size", type=int, default=None)
    p.add_argument("--dot", action="store_true", help="write DOT text to --out")
    p.add_argument("--png", default=None)

    p = sub.add_parser("stats", help="per-class measurements and U tests")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--measure", choices=["actions", "dwell"], default=None)
    p.add_argument("--csv", default=None)
    p.add_argument("--png", default=None)

    p = sub.add_parser("params-report", help="trainable parameter counts")
    _add_common(p)
    p.add_argument("--model", required=True)

    return parser


def _cmd_gen(args, cfg) -> int:
    seed = _opt(args, cfg, "seed", 0)
    counts_s = _opt(args, cfg, "counts", "132,38,19")
    classes_s = _opt(args, cfg, "classes", "trg,pur,exp")
    sites = _opt(args, cfg, "sites", 3)
    out = _opt(args, cfg, "out", None)
    if not out:
        raise _UsageError("gen requires --out directory")
    counts = tuple(int(c) for c in str(counts_s).split(","))
    if len(counts) != 3:
        raise _UsageError("--counts must be train,val,test")
    classes = tuple(Behavior(c.strip().upper()) for c in str(classes_s).split(","))
    params = GenParams(site_count=sites, seed=seed)
    dataset = gen_dataset(counts, params, seed=seed, classes=classes)
    written = datasets.write_dataset(dataset, out)
    _diag(f"wrote {written['events']} and {written['manifest']}")
    _emit(
        {
            "out": str(out),
            "sessions": sum(len(v) for v in dataset.manifest["splits"].values()),
            "events": len(dataset.events),
            "splits": {k: len(v) for k, v in dataset.manifest["splits"].items()},
        }
    )
    return EXIT_OK


def _cmd_ingest(args, cfg) -> int:
    from .events import ingest_events
    from .paths import linearize_visits
    from .vocab import build_vocabulary

    tolerance = _opt(args, cfg, "tolerance-ms", 0)
    with open(args.infile, "rb") as fp:
        sessions = ingest_events(fp, tolerance_ms=tolerance)
    result: dict = {
        "sessions": len(sessions),
        "events": sum(len(v) for v in sessions.values()),
    }
    paths_out = _opt(args, cfg, "paths-out", None)
    vocab_out = _opt(args, cfg, "vocab-out", None)
    if paths_out or vocab_out:
        seqs = {sid: linearize_visits(evs) for sid, evs in sessions.items()}
        if args.vocab:
            with open(args.vocab, encoding="utf-8") as fp:
                vocab = Vocabulary.load(fp)
        else:
            vocab = build_vocabulary(s.urls for s in seqs.values())
        if vocab_out:
            with open(vocab_out, "w", encoding="utf-8") as fp:
                vocab.save(fp)
            result["vocab_out"] = vocab_out
            result["vocab_size"] = len(vocab)
        if paths_out:
            outdir = Path(paths_out)
            outdir.mkdir(parents=True, exist_ok=True)
            for sid, seq in seqs.items():
                path = ActionPath(
                    user_id=seq.user_id,
                    session_id=sid,
                    actions=tuple((vocab.id_of(u), d) for u, d in seq.visits),
                    label=seq.label,
                )
                datasets.write_path_file(path, outdir / f"{sid}.json")
            result["paths_out"] = str(paths_out)
            result["paths"] = len(seqs)
    _emit(result)
    return EXIT_OK


def _embedding_config(args, cfg, seed: int) -> url2vec.Url2VecConfig:
    return url2vec.Url2VecConfig(
        window=_opt(args, cfg, "window", 2),
        dim=_opt(args, cfg, "dim", 16),
        negatives=_opt(args, cfg, "negatives", 5),
        epochs=_opt(args, cfg, "epochs", 10),
        learning_rate=_opt(args, cfg, "lr", 0.05),
        seed=seed,
    )


def _train_embeddings_for(data: datasets.LoadedDataset, config: url2vec.Url2VecConfig):
    corpus = data.splits.get("train", []) + data.splits.get("val", [])
    if not corpus:
        raise EmptyDataset("dataset has no train/val paths for embeddings")
    pairs = url2vec.build_pairs(corpus, config.window)
    table = url2vec.train_embeddings(pairs, len(data.vocab), config)
    return table, len(pairs)


def _cmd_embed(args, cfg) -> int:
    seed = _opt(args, cfg, "seed", 0)
    data = datasets.load_dataset(args.data)
    config = _embedding_config(args, cfg, seed)
    table, n_pairs = _train_embeddings_for(data, config)
    out = _opt(args, cfg, "out", None)
    if out:
        with open(out, "w", encoding="utf-8") as fp:
            table.save(fp, config)
    vocab_out = _opt(args, cfg, "vocab-out", None)
    if vocab_out:
        with open(vocab_out, "w", encoding="utf-8") as fp:
            data.vocab.save(fp)
    _emit(
        {
            "vocab_size": table.vocab_size,
            "dim": table.dim,
            "pairs": n_pairs,
            "out": out,
        }
    )
    return EXIT_OK


def _cmd_train(args, cfg) -> int:
    seed = _opt(args, cfg, "seed", 0)
    data = datasets.load_dataset(args.data)
    latent = _opt(args, cfg, "latent", 10)
    embed_dim = _opt(args, cfg, "embed-dim", 16)
    objective = _opt(args, cfg, "objective", "mixed")
    mode = _opt(args, cfg, "candidate-mode", "paper")

    if args.embeddings:
        with open(args.embeddings, encoding="utf-8") as fp:
            table, emb_cfg = url2vec.EmbeddingTable.load(fp)
        if table.vocab_size != len(data.vocab):
            raise EmptyDataset(
                f"embeddings cover {table.vocab_size} ids, dataset vocab is {len(data.vocab)}"
            )
        embed_dim = table.dim
    else:
        emb_cfg = url2vec.Url2VecConfig(dim=embed_dim, seed=seed)
        table, _ = _train_embeddings_for(data, emb_cfg)
        _diag(f"trained inline embeddings: dim={embed_dim}")

    config = apm.TrainConfig(
        epochs=_opt(args, cfg, "epochs", 500),
        batch_size=_opt(args, cfg, "batch", 32),
        learning_rate=_opt(args, cfg, "lr", 0.001),
        l2_lambda=_opt(args, cfg, "l2", 1e-7),
        early_stop_patience=_opt(args, cfg, "patience", 1000),
        seed=seed,
    )
    train_ex = apm.examples_from_paths(data.split("train"), objective=objective)
    val_ex = apm.examples_from_paths(data.split("val"), objective=objective)
    params = apm.init_params(
        vocab_size=len(data.vocab),
        embed_dim=embed_dim,
        latent_dim=latent,
        candidate_mode=mode,
        seed=seed,
        embedding_init=table.input_vectors,
    )
    best, history = apm.train(train_ex, val_ex, params, config)

    out = _opt(args, cfg, "out", None)
    if out:
        with open(out, "w", encoding="utf-8") as fp:
            apm.save_checkpoint(fp, best, config, history)
    loss_png = _opt(args, cfg, "loss-png", None)
    if loss_png:
        figures.loss_history_figure(history, loss_png)
    best_epoch = min(history, key=lambda h: h["val_loss"])
    _emit(
        {
            "epochs_run": len(history),
            "best_epoch": best_epoch["epoch"],
            "best_val_loss": best_epoch["val_loss"],
            "final_train_loss": history[-1]["train_loss"],
            "parameters": best.parameter_counts()["total"],
            "out": out,
        }
    )
    return EXIT_OK


def _load_model(path: str) -> apm.ApmParams:
    with open(path, encoding="utf-8") as fp:
        params, _, _ = apm.load_checkpoint(fp)
    return params


def _select_paths(args, cfg):
    if args.path:
        return [datasets.load_path_file(args.path)]
    if args.data:
        data = datasets.load_dataset(args.data)
        if getattr(args, "session", None):
            if args.session not in data.by_session:
                raise EmptyDataset(f"session {args.session!r} not in dataset")
            return [data.by_session[args.session]]
        split = _opt(args, cfg, "split", "test")
        return data.split(split)
    raise _UsageError("need --path or --data")


def _cmd_classify(args, cfg) -> int:
    model = _load_model(args.model)
    paths = _select_paths(args, cfg)
    results = []
    hits = 0
    for path in paths:
        label, probs = apm.classify(model, path)
        ok = path.label is not None and label is path.label
        hits += 1 if ok else 0
        results.append(
            {
                "session_id": path.session_id,
                "label": label.value,
                "truth": path.label.value if path.label else None,
                "probs": {
                    "TRG": probs[0],
                    "PUR": probs[1],
                    "EXP": probs[2],
                },
            }
        )
    payload: dict = results[0] if len(results) == 1 else {
        "accuracy": hits / len(results),
        "results": results,
    }
    out = _opt(args, cfg, "out", None)
    if out:
        Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _emit(payload)
    return EXIT_OK


def _cmd_predict(args, cfg) -> int:
    model = _load_model(args.model)
    path = _select_paths(args, cfg)[0]
    fraction = _opt(args, cfg, "fraction", 0.8)
    max_len = _opt(args, cfg, "max-len", 30)
    n = len(path.actions)
    cut = min(n, max(1, math.ceil(fraction * n)))
    prefix = ActionPath(
        user_id=path.user_id,
        session_id=path.session_id,
        actions=path.actions[:cut],
        label=path.label,
    )
    predicted = apm.predict_suffix(model, prefix, max_len=max_len)
    payload = {
        "session_id": path.session_id,
        "fraction": fraction,
        "prefix_len": cut,
        "predicted_ids": predicted,
        "truth_ids": [a for a, _ in path.actions[cut:]],
    }
    out = _opt(args, cfg, "out", None)
    if out:
        Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _emit(payload)
    return EXIT_OK


def _cmd_eval_curve(args, cfg) -> int:
    model = _load_model(args.model)
    data = datasets.load_dataset(args.data)
    split = _opt(args, cfg, "split", "test")
    fractions = [
        float(f) for f in str(_opt(args, cfg, "fractions", _DEFAULT_FRACTIONS)).split(",")
    ]
    points = evaluation.fraction_curve(model, data.split(split), fractions)
    out = _opt(args, cfg, "out", None)
    if out:
        out = Path(out)
        out.write_text(evaluation.curve_to_csv(points), encoding="utf-8")
        out.with_suffix(".json").write_text(
            json.dumps({"points": [[f, a] for f, a in points]}, indent=2) + "\n",
            encoding="utf-8",
        )
        png = _opt(args, cfg, "png", None) or str(out.with_suffix(".png"))
        figures.fraction_curve_figure(points, png)
        _diag(f"wrote {out}, {out.with_suffix('.json')}, {png}")
    _emit({"split": split, "points": [[f, a] for f, a in points]})
    return EXIT_OK


def _cmd_patterns(args, cfg) -> int:
    data = datasets.load_dataset(args.data)
    min_size = _opt(args, cfg, "min-cluster-size", 3)
    if args.sessions:
        sids = [s.strip() for s in str(args.sessions).split(",")]
        graphs = []
        for sid in sids:
            if sid not in data.by_session:
                raise EmptyDataset(f"session {sid!r} not in dataset")
            graphs.append(build_graph(data.by_session[sid]))
        report = PatternReport(overlaps=find_overlaps(graphs))
        dot_subject = graphs
    elif args.session:
        if args.session not in data.by_session:
            raise EmptyDataset(f"session {args.session!r} not in dataset")
        graph = build_graph(data.by_session[args.session])
        report = mine_patterns(graph, min_cluster_size=min_size)
        dot_subject = graph
    else:
        raise _UsageError("patterns needs --session or --sessions")

    out = _opt(args, cfg, "out", None)
    if out:
        if args.dot:
            Path(out).write_text(export_dot(dot_subject, report), encoding="utf-8")
        else:
            Path(out).write_text(
                json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )
    png = _opt(args, cfg, "png", None)
    if png:
        figures.click_graph_figure(dot_subject, report, png)
    _emit(report.to_json_dict())
    return EXIT_OK


def _cmd_stats(args, cfg) -> int:
    data = datasets.load_dataset(args.data)
    measure = _opt(args, cfg, "measure", "actions")
    values: dict[str, list[float]] = {"TRG": [], "PUR": [], "EXP": []}
    rows: list[tuple[str, str, float]] = []
    for split_paths in data.splits.values():
        for path in split_paths:
            if path.label is None:
                continue
            v = float(len(path.actions)) if measure == "actions" else sum(path.dwells)
            values[path.label.value].append(v)
            rows.append((path.session_id, path.label.value, v))
    tests = []
    pairs = [("PUR", "TRG"), ("PUR", "EXP"), ("TRG", "EXP")]
    for a, b in pairs:
        if not values[a] or not values[b]:
            continue
        for alternative in ("greater", "less"):
            u, p = evaluation.mann_whitney_one_tailed(values[a], values[b], alternative)
            tests.append({"x": a, "y": b, "alternative": alternative, "U": u, "p": p})
    payload = {
        "measure": measure,
        "medians": {
            k: (sorted(v)[len(v) // 2] if v else None) for k, v in values.items()
        },
        "counts": {k: len(v) for k, v in values.items()},
        "tests": tests,
    }
    out = _opt(args, cfg, "out", None)
    if out:
        Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    csv_path = _opt(args, cfg, "csv", None)
    if csv_path:
        lines = ["session_id,label,value"]
        lines.extend(f"{sid},{lab},{val!r}" for sid, lab, val in rows)
        Path(csv_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    png = _opt(args, cfg, "png", None)
    if png:
        figures.class_boxplot_figure(values, measure, png)
    _emit(payload)
    return EXIT_OK


def _cmd_params_report(args, cfg) -> int:
    model = _load_model(args.model)
    payload = {
        "latent_dim": model.latent_dim,
        "embedding_dim": model.embed_dim,
        "vocab_size": model.vocab_size,
        "candidate_mode": model.candidate_mode,
        "counts": model.parameter_counts(),
    }
    out = _opt(args, cfg, "out", None)
    if out:
        Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _emit(payload)
    return EXIT_OK


_COMMANDS = {
    "gen": _cmd_gen,
    "ingest": _cmd_ingest,
    "embed": _cmd_embed,
    "train": _cmd_train,
    "classify": _cmd_classify,
    "predict": _cmd_predict,
    "eval-curve": _cmd_eval_curve,
    "patterns": _cmd_patterns,
    "stats": _cmd_stats,
    "params-report": _cmd_params_report,
}


def run(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _load_config(args.config)
        return _COMMANDS[args.command](args, cfg)
    except _UsageError as exc:
        _diag(f"usage error: {exc}")
        return EXIT_USAGE
    except ClickpathError as exc:
        _emit({"error": {"type": type(exc).__name__, "message": str(exc)}})
        _diag(f"{type(exc).__name__}: {exc}")
        return EXIT_DATA
    except Exception as exc:  # invariant violation or bug
        _diag(f"internal error: {type(exc).__name__}: {exc}")
        traceback.print_exc(file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())
