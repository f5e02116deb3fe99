"""Command-line entry point: every pipeline stage as a subcommand.

Machine-readable results go to stdout, diagnostics to stderr. Exit codes:
0 success, 1 operation failure, 2 usage error. Randomized commands take
--seed; when omitted, a fresh seed is chosen and printed to stderr so any
artifact can be reproduced from logs. An optional key=value config file
(--config) supplies defaults for any long flag of the chosen subcommand;
explicit flags win.
"""

from __future__ import annotations

import argparse
import dataclasses
import secrets
import sys
from pathlib import Path

from . import corpus, evaluate, regress, scoring, tuples
from .features import (
    FeatureConfig,
    FeatureSpace,
    Resources,
    load_embeddings,
    load_lexicon,
)
from .tokenizer import load_negators


def _print(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _pick_seed(ns: argparse.Namespace) -> int:
    if getattr(ns, "seed", None) is not None:
        return ns.seed
    seed = secrets.randbelow(2**31)
    print(f"seed: {seed}", file=sys.stderr)
    return seed


def _resources(ns: argparse.Namespace) -> Resources:
    lexicons = [load_lexicon(p) for p in (getattr(ns, "lexicon", None) or [])]
    embeddings = None
    if getattr(ns, "embeddings", None):
        embeddings = load_embeddings(ns.embeddings)
    negators = None
    if getattr(ns, "negators", None):
        negators = load_negators(ns.negators)
    return Resources(lexicons=lexicons, embeddings=embeddings, negators=negators)


def _feature_config(ns: argparse.Namespace, label: str) -> FeatureConfig:
    base = FeatureConfig.parse(label)
    return dataclasses.replace(
        base,
        embedding_scheme=getattr(ns, "embedding_scheme", "average"),
        concat_first_k=getattr(ns, "concat_k", 10),
    )


# -- subcommand implementations ------------------------------------------------


def _cmd_tuples(ns: argparse.Namespace) -> int:
    if ns.tuples_cmd == "gen":
        if ns.items:
            item_ids = [
                line.strip()
                for line in Path(ns.items).read_text(encoding="utf-8").splitlines()
                if line.strip()
            ]
        else:
            item_ids = corpus.parse_corpus(ns.corpus, expect_gold=False).ids()
        seed = _pick_seed(ns)
        ts = tuples.generate_tuples(item_ids, seed=seed, max_restarts=ns.max_restarts)
        lines = [f"{t.tuple_id}\t" + "\t".join(t.item_ids) for t in ts.tuples]
        _print("".join(line + "\n" for line in lines), ns.out)
        print(f"generated {len(ts.tuples)} tuples over {len(item_ids)} items", file=sys.stderr)
        return 0
    ts = tuples.read_tuples(ns.tuples)
    violations = tuples.validate_tuple_set(ts)
    for v in violations:
        print(v)
    if violations:
        print(f"{len(violations)} violation(s)", file=sys.stderr)
        return 1
    print("tuple set satisfies the design constraints", file=sys.stderr)
    return 0


def _cmd_strip_hashtags(ns: argparse.Namespace) -> int:
    ds = corpus.parse_corpus(ns.corpus, expect_gold=not ns.no_gold)
    terms = corpus.load_query_terms(ns.query_terms)
    extended = corpus.add_stripped_copies(ds, terms)
    n_copies = len(extended) - len(ds)
    if ns.out is None or ns.out == "-":
        lines = [
            f"{tw.id}\t{tw.text}\t{tw.emotion}\t"
            f"{corpus.SCORE_SENTINEL if tw.gold_score is None else repr(tw.gold_score)}"
            for tw in extended
        ]
        sys.stdout.write("".join(line + "\n" for line in lines))
    else:
        corpus.write_corpus(extended, ns.out)
    print(f"created {n_copies} stripped copies", file=sys.stderr)
    return 0


def _cmd_split(ns: argparse.Namespace) -> int:
    ds = corpus.parse_corpus(ns.corpus, expect_gold=not ns.no_gold)
    fracs = tuple(float(x) for x in ns.fractions.split(","))
    if len(fracs) != 3:
        raise ValueError("--fractions must be three comma-separated numbers")
    seed = _pick_seed(ns)
    train_ds, dev_ds, test_ds = corpus.partition_dataset(ds, fracs, seed=seed)
    corpus.write_corpus(train_ds, ns.out_train)
    corpus.write_corpus(dev_ds, ns.out_dev)
    corpus.write_corpus(test_ds, ns.out_test)
    print(
        f"split {len(ds)} -> train {len(train_ds)} / dev {len(dev_ds)} / test {len(test_ds)}",
        file=sys.stderr,
    )
    return 0


def _cmd_score(ns: argparse.Namespace) -> int:
    ts = tuples.read_tuples(ns.tuples)
    responses = scoring.read_responses_csv(ns.responses)
    texts: dict[str, str] = {}
    emotion = ns.emotion
    if ns.corpus:
        ds = corpus.parse_corpus(ns.corpus, expect_gold=False)
        texts = {tw.id: tw.text for tw in ds}
        emotion = emotion or ds.emotion
    if emotion is None:
        raise ValueError("provide --emotion (or --corpus to infer it)")
    table = scoring.compute_scores(
        ts, responses, include_gold=ns.include_gold, emotion=emotion
    )
    lines = []
    for item_id, entry in sorted(table.entries.items()):
        text = texts.get(item_id, item_id)
        lines.append(f"{item_id}\t{text}\t{emotion}\t{entry.scaled!r}")
    _print("".join(line + "\n" for line in lines), ns.out)
    print(f"scored {len(table.entries)} items from {len(responses)} responses", file=sys.stderr)
    return 0


def _cmd_shr(ns: argparse.Namespace) -> int:
    ts = tuples.read_tuples(ns.tuples)
    responses = scoring.read_responses_csv(ns.responses)
    seed = _pick_seed(ns)
    result = scoring.split_half_reliability(
        ts, responses, iterations=ns.iterations, seed=seed, include_gold=ns.include_gold
    )
    _print(
        "pearson\tspearman\titerations\n"
        f"{result.pearson:.6f}\t{result.spearman:.6f}\t{result.iterations}\n",
        ns.out,
    )
    return 0


def _cmd_features(ns: argparse.Namespace) -> int:
    ds = corpus.parse_corpus(ns.corpus, expect_gold=not ns.no_gold)
    config = _feature_config(ns, ns.feature_set)
    res = _resources(ns)
    if ns.space_in:
        space = FeatureSpace.load(ns.space_in, embeddings=res.embeddings)
    else:
        space = FeatureSpace.fit(ds, config, res)
    matrix = space.transform(ds)
    if ns.space_out:
        space.save(ns.space_out)
    matrix.save(ns.matrix_out)
    print(
        f"matrix: {matrix.n_rows} rows x {matrix.width} features "
        f"(sparse {len(matrix.sparse_names)}, dense {matrix.width - len(matrix.sparse_names)})",
        file=sys.stderr,
    )
    return 0


def _cmd_train(ns: argparse.Namespace) -> int:
    ds = corpus.parse_corpus(ns.train)
    config = _feature_config(ns, ns.feature_set)
    res = _resources(ns)
    space = FeatureSpace.fit(ds, config, res)
    X = space.transform(ds)
    y = [tw.gold_score for tw in ds]
    if any(v is None for v in y):
        raise ValueError("training corpus must carry gold scores")
    model = regress.train(
        X, y, C=ns.C, epsilon=ns.epsilon, tol=ns.tol, max_iter=ns.max_iter
    )
    regress.save_model(model, ns.model_out)
    space.save(ns.space_out)
    print(
        f"trained on {X.n_rows} rows, {X.width} features; "
        f"final objective {model.objective_history[-1]:.6g} "
        f"after {len(model.objective_history) - 1} epochs",
        file=sys.stderr,
    )
    return 0


def _cmd_predict(ns: argparse.Namespace) -> int:
    ds = corpus.parse_corpus(ns.corpus, expect_gold=False)
    res = _resources(ns)
    space = FeatureSpace.load(ns.space, embeddings=res.embeddings)
    model = regress.load_model(ns.model)
    scores = regress.predict(model, space.transform(ds))
    if not ns.no_clamp:
        scores = regress.clamp_for_submission(scores)
    rows = [
        corpus.SubmissionRow(id=tw.id, text=tw.text, emotion=tw.emotion, score=float(s))
        for tw, s in zip(ds, scores)
    ]
    if ns.out is None or ns.out == "-":
        sys.stdout.write(
            "".join(f"{r.id}\t{r.text}\t{r.emotion}\t{r.score!r}\n" for r in rows)
        )
    else:
        corpus.write_submission(rows, ns.out)
    print(f"predicted {len(rows)} scores", file=sys.stderr)
    return 0


def _cmd_check_format(ns: argparse.Namespace) -> int:
    gold = corpus.parse_corpus(ns.gold)
    report = corpus.check_submission_format(ns.sub, gold)
    print(report.summary())
    return 0 if report.ok else 1


def _cmd_eval(ns: argparse.Namespace) -> int:
    if len(ns.gold) != len(ns.sub):
        raise ValueError("--gold and --sub must be given the same number of times")
    pairs = []
    for gold_path, sub_path in zip(ns.gold, ns.sub):
        gold = corpus.parse_corpus(gold_path)
        report = corpus.check_submission_format(sub_path, gold)
        if not report.ok:
            print(f"{sub_path}: format check failed", file=sys.stderr)
            print(report.summary(), file=sys.stderr)
            return 1
        pairs.append((gold, corpus.read_submission(sub_path)))
    result = evaluate.evaluate_many(pairs)
    sys.stdout.write(result.to_tsv())
    sys.stderr.write(result.to_text())
    return 0


def _cmd_ablate(ns: argparse.Namespace) -> int:
    if len(ns.train) != len(ns.test):
        raise ValueError("--train and --test must be given the same number of times")
    splits = {}
    for train_path, test_path in zip(ns.train, ns.test):
        train_ds = corpus.parse_corpus(train_path)
        test_ds = corpus.parse_corpus(test_path)
        if train_ds.emotion != test_ds.emotion:
            raise ValueError(
                f"emotion mismatch: {train_path} is {train_ds.emotion}, "
                f"{test_path} is {test_ds.emotion}"
            )
        splits[train_ds.emotion] = (train_ds, test_ds)
    configs = [_feature_config(ns, c) for c in ns.feature_sets.split(",") if c.strip()]
    table = evaluate.ablation_run(splits, configs, _resources(ns), C=ns.C, epsilon=ns.epsilon)
    sys.stdout.write(table.to_tsv())
    sys.stderr.write(table.to_text())
    return 0


def _cmd_serve(ns: argparse.Namespace) -> int:
    from .http_api import make_server, serve_forever
    from .service import AnnotationService, TaskConfig, load_gold_keys

    if ns.data_dir and Path(ns.data_dir).exists() and any(Path(ns.data_dir).glob("*.jsonl")):
        service = AnnotationService.load(ns.data_dir)
        print(f"replayed state for {len(service.tasks)} task(s)", file=sys.stderr)
    else:
        service = AnnotationService(data_dir=ns.data_dir)
    if ns.corpus and ns.tuples and ns.task_id not in service.tasks:
        ds = corpus.parse_corpus(ns.corpus, expect_gold=ns.expect_gold)
        ts = tuples.read_tuples(ns.tuples)
        gold_keys = load_gold_keys(ns.gold_keys) if ns.gold_keys else []
        seed = _pick_seed(ns)
        service.create_task(
            task_id=ns.task_id,
            emotion=ds.emotion,
            tuples=ts,
            items={tw.id: tw.text for tw in ds},
            gold_keys=gold_keys,
            config=TaskConfig(
                target_responses_per_tuple=ns.target,
                gold_rate=ns.gold_rate,
                seed=seed,
            ),
        )
        print(f"created task {ns.task_id!r} with {len(ts.tuples)} tuples", file=sys.stderr)
    ui_dir = ns.ui if ns.ui and Path(ns.ui).is_dir() else None
    server = make_server(service, host=ns.host, port=ns.port, ui_dir=ui_dir, verbose=ns.verbose)
    print(f"listening on http://{server.server_address[0]}:{server.server_address[1]}/",
          file=sys.stderr)
    serve_forever(server)
    return 0


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bwslab",
        description="Best-worst scaling annotation and emotion-intensity regression toolkit",
    )
    parser.add_argument("--config", help="key=value file with defaults for the subcommand")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tuples", help="generate or validate annotation tuple designs")
    tsub = p.add_subparsers(dest="tuples_cmd", required=True)
    g = tsub.add_parser("gen", help="generate 2N 4-tuples over N items")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--items", help="file with one item id per line")
    src.add_argument("--corpus", help="corpus TSV whose ids become the items")
    g.add_argument("--seed", type=int)
    g.add_argument("--max-restarts", type=int, default=50)
    g.add_argument("--out", help="output tuple TSV (default stdout)")
    g.set_defaults(func=_cmd_tuples)
    c = tsub.add_parser("check", help="validate a tuple file against the design constraints")
    c.add_argument("--tuples", required=True)
    c.set_defaults(func=_cmd_tuples)

    p = sub.add_parser("strip-hashtags", help="create copies with trailing query hashtags removed")
    p.add_argument("--corpus", required=True)
    p.add_argument("--query-terms", required=True, help="one lowercase term per line")
    p.add_argument("--no-gold", action="store_true", help="corpus has NONE score sentinels")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_strip_hashtags)

    p = sub.add_parser("split", help="partition a corpus into train/dev/test, pairs kept together")
    p.add_argument("--corpus", required=True)
    p.add_argument("--fractions", default="0.5,0.05,0.45")
    p.add_argument("--seed", type=int)
    p.add_argument("--no-gold", action="store_true")
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-dev", required=True)
    p.add_argument("--out-test", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("score", help="aggregate best-worst responses into intensity scores")
    p.add_argument("--tuples", required=True)
    p.add_argument("--responses", required=True)
    p.add_argument("--corpus", help="join item texts and emotion from this corpus")
    p.add_argument("--emotion", choices=corpus.EMOTIONS)
    p.add_argument("--include-gold", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("shr", help="split-half reliability of a response set")
    p.add_argument("--tuples", required=True)
    p.add_argument("--responses", required=True)
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--include-gold", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_shr)

    def add_resource_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--lexicon", action="append", help="lexicon TSV (repeatable)")
        p.add_argument("--embeddings", help="embedding text file")
        p.add_argument("--negators", help="override the bundled negator list")
        p.add_argument("--embedding-scheme", choices=("average", "add", "concat"),
                       default="average")
        p.add_argument("--concat-k", type=int, default=10,
                       help="token count for the concat scheme")

    p = sub.add_parser("features", help="extract a feature matrix from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--feature-set", required=True, help='e.g. "WN+CN+WE+L"')
    p.add_argument("--no-gold", action="store_true")
    add_resource_flags(p)
    p.add_argument("--space-in", help="reuse a fitted feature space instead of fitting")
    p.add_argument("--space-out")
    p.add_argument("--matrix-out", required=True)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("train", help="fit the intensity regressor")
    p.add_argument("--train", required=True, help="gold-scored training corpus TSV")
    p.add_argument("--feature-set", required=True)
    add_resource_flags(p)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--model-out", required=True)
    p.add_argument("--space-out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="score a corpus with a trained model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--space", required=True)
    add_resource_flags(p)
    p.add_argument("--no-clamp", action="store_true", help="emit raw unclamped predictions")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("check-format", help="check a submission file against a gold corpus")
    p.add_argument("--gold", required=True)
    p.add_argument("--sub", required=True)
    p.set_defaults(func=_cmd_check_format)

    p = sub.add_parser("eval", help="official metrics for one or more emotions")
    p.add_argument("--gold", action="append", required=True)
    p.add_argument("--sub", action="append", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ablate", help="train/evaluate a grid of feature configurations")
    p.add_argument("--train", action="append", required=True)
    p.add_argument("--test", action="append", required=True)
    p.add_argument("--feature-sets", required=True, help='comma list, e.g. "L,WE+L"')
    add_resource_flags(p)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("serve", help="run the annotation service (and static UI)")
    p.add_argument("--data-dir", help="event-log directory (enables persistence/replay)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8377)
    p.add_argument("--ui", default="frontend/dist", help="static UI asset directory")
    p.add_argument("--task-id", default="task1")
    p.add_argument("--corpus", help="bootstrap a task from this corpus TSV")
    p.add_argument("--tuples", help="tuple TSV for the bootstrap task")
    p.add_argument("--gold-keys", help="gold-key TSV for the bootstrap task")
    p.add_argument("--expect-gold", action="store_true")
    p.add_argument("--target", type=int, default=3)
    p.add_argument("--gold-rate", type=float, default=0.05)
    p.add_argument("--seed", type=int)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=_cmd_serve)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, ns: argparse.Namespace,
                       argv: list[str]) -> None:
    if not ns.config:
        return
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(ns.config).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{ns.config} line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    explicit = set()
    for arg in argv:
        if arg.startswith("--"):
            explicit.add(arg.split("=", 1)[0][2:].replace("-", "_"))

    # Walk down the (possibly nested) subparser chain this invocation took,
    # applying config values wherever the option is known and was not given
    # explicitly. argparse has no public API for this, hence the underscores.
    def apply(p: argparse.ArgumentParser) -> None:
        for action in p._actions:  # noqa: SLF001
            if isinstance(action, argparse._SubParsersAction):  # noqa: SLF001
                chosen = action.choices.get(getattr(ns, action.dest, None))
                if chosen is not None:
                    apply(chosen)
                continue
            dest = action.dest
            if dest in values and dest not in explicit:
                raw = values[dest]
                if isinstance(action, argparse._StoreTrueAction):  # noqa: SLF001
                    setattr(ns, dest, raw.lower() in ("1", "true", "yes"))
                elif action.type is not None:
                    setattr(ns, dest, action.type(raw))
                else:
                    setattr(ns, dest, raw)

    apply(parser)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        _apply_config_file(parser, ns, argv)
        return ns.func(ns)
    except BrokenPipeError:
        return 1
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
