"""Command-line entry point: ``pcgdee <subcommand> [flags]``.

Each subcommand reads and writes only the paths given by flags.  Failures
exit with status 1 and a message naming the stage; bad usage exits with 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from .corpus import (
    EventRecord,
    dump_corpus,
    dump_schema,
    load_corpus,
    load_schema,
    record_from_dict,
    record_to_dict,
)
from .evaluate import evaluate_corpus, oracle_decode_errors
from .graph import dump_graphs, encode_gold_graph
from .pipeline import Extractor
from .scorer import EntityEmbedder, LossWeights, TrainConfig, load_checkpoint, save_checkpoint, train
from .synth import SynthConfig, generate_corpus
from .triggers import PseudoTriggerPlan, augment_with_annotated, select_pseudo_triggers


def _write_json(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _echo(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func",)}


def _load_plan(path: str) -> PseudoTriggerPlan:
    return PseudoTriggerPlan.from_dict(json.loads(Path(path).read_text()))


def cmd_select_triggers(args) -> None:
    schema = load_schema(args.schema)
    docs = load_corpus(args.corpus, schema)
    plan = select_pseudo_triggers(docs, schema, args.r, scope=args.scope)
    if args.augment:
        plan = augment_with_annotated(plan, schema, docs, scope=args.scope)
    obj = plan.to_dict()
    obj["config"] = _echo(args)
    _write_json(obj, args.out)


def cmd_encode(args) -> None:
    schema = load_schema(args.schema)
    docs = load_corpus(args.corpus, schema)
    plan = _load_plan(args.plan)
    dump_graphs(((d.doc_id, encode_gold_graph(d, plan)) for d in docs), args.out)


def cmd_train(args) -> None:
    schema = load_schema(args.schema)
    docs = load_corpus(args.corpus, schema)
    plan = _load_plan(args.plan)
    embedder = EntityEmbedder(
        etypes=sorted({e.etype for d in docs for e in d.entities}),
        content_dim=args.content_dim,
        type_dim=args.type_dim,
        seed=args.seed,
    )
    cfg = TrainConfig(lr=args.lr, epochs=args.epochs, seed=args.seed, gamma=args.gamma, weights=LossWeights())
    res = train(docs, schema, plan, embedder, cfg)
    save_checkpoint(args.out, embedder, res.similarity, res.detector, res.roles, cfg)
    print(json.dumps({"final_loss": res.losses[-1] if res.losses else None, "epochs": len(res.losses)}))


def _extractor(args, plan: PseudoTriggerPlan) -> Extractor:
    embedder, sim, det, roles, _ = load_checkpoint(args.model)
    if args.gamma is not None:
        sim.gamma = args.gamma
    r = args.r if args.r is not None else plan.effective_r_size
    return Extractor(embedder, sim, det, roles, r)


def cmd_decode(args) -> None:
    schema = load_schema(args.schema)
    docs = load_corpus(args.corpus, schema)
    plan = _load_plan(args.plan)
    ex = _extractor(args, plan)
    preds = [ex.extract(d, oracle_roles=args.oracle_roles, schema=schema) for d in docs]
    echo = _echo(args)
    dump_corpus(docs, args.out, [{"pred_records": [record_to_dict(r) for r in p], "config": echo} for p in preds])


def _load_predictions(path: str) -> dict[str, list[EventRecord]]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if "pred_records" not in obj:
                raise ValueError(f"{path}:{lineno}: no 'pred_records' field")
            out[obj["doc_id"]] = [record_from_dict(r) for r in obj["pred_records"]]
    return out


def cmd_eval(args) -> None:
    schema = load_schema(args.schema) if args.schema else None
    gold = load_corpus(args.gold, schema)
    if args.bounds:
        if not (args.plan and schema):
            raise ValueError("--bounds needs --plan and --schema")
        plan = _load_plan(args.plan)
        obj = oracle_decode_errors(gold, plan, schema, args.r).to_dict()
    else:
        if not args.pred:
            raise ValueError("eval needs --pred (or --bounds)")
        report = evaluate_corpus(_load_predictions(args.pred), gold)
        obj = report.to_dict()
        if not args.trace:
            obj.pop("trace")
    obj["config"] = _echo(args)
    _write_json(obj, args.out)


def cmd_synth(args) -> None:
    cfg = SynthConfig(
        n_docs=args.n_docs,
        n_types=args.n_types,
        roles_per_type=tuple(args.roles),
        records_per_doc=tuple(args.records),
        null_rate=args.null_rate,
        share_trigger_rate=args.share_rate,
        annotated_trigger=args.annotated,
        seed=args.seed,
    )
    docs, schema = generate_corpus(cfg)
    dump_corpus(docs, args.out)
    dump_schema(schema, args.schema)


def cmd_bench(args) -> None:
    schema = load_schema(args.schema)
    docs = load_corpus(args.corpus, schema)
    plan = _load_plan(args.plan)
    ex = _extractor(args, plan) if args.model else None
    inputs = bench_mod.prepare_inputs(docs, schema, plan, ex)
    if args.mode == "both":
        fast, base = bench_mod.compare(inputs, schema, plan, args.batch_size, args.repetitions, args.threads)
        reports = [fast.to_dict(), base.to_dict()]
    else:
        reports = [bench_mod.bench(inputs, schema, plan, args.mode, args.batch_size, args.repetitions, args.threads).to_dict()]
    _write_json({"reports": reports, "config": _echo(args)}, args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pcgdee", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("select-triggers", help="pick pseudo-trigger roles per event type")
    s.add_argument("--corpus", required=True)
    s.add_argument("--schema", required=True)
    s.add_argument("--r", type=int, default=1)
    s.add_argument("--scope", choices=["type", "document"], default="type")
    s.add_argument("--augment", action="store_true", help="prepend annotated trigger roles")
    s.add_argument("--out")
    s.set_defaults(func=cmd_select_triggers)

    s = sub.add_parser("encode", help="dump gold pruned complete graphs")
    s.add_argument("--corpus", required=True)
    s.add_argument("--schema", required=True)
    s.add_argument("--plan", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("train", help="train the scorers")
    s.add_argument("--corpus", required=True)
    s.add_argument("--schema", required=True)
    s.add_argument("--plan", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--epochs", type=int, default=100)
    s.add_argument("--lr", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--gamma", type=float, default=0.5)
    s.add_argument("--content-dim", type=int, default=64)
    s.add_argument("--type-dim", type=int, default=8)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("decode", help="extract records with a trained model")
    s.add_argument("--corpus", required=True)
    s.add_argument("--schema", required=True)
    s.add_argument("--plan", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--r", type=int)
    s.add_argument("--gamma", type=float)
    s.add_argument("--oracle-roles", action="store_true")
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("eval", help="score predictions or report decoding upper bounds")
    s.add_argument("--gold", required=True)
    s.add_argument("--pred")
    s.add_argument("--schema")
    s.add_argument("--plan")
    s.add_argument("--r", type=int)
    s.add_argument("--bounds", action="store_true")
    s.add_argument("--trace", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="write a synthetic corpus and schema")
    s.add_argument("--out", required=True)
    s.add_argument("--schema", required=True, help="schema output path")
    s.add_argument("--n-docs", type=int, default=100)
    s.add_argument("--n-types", type=int, default=2)
    s.add_argument("--roles", type=int, nargs=2, default=(4, 4), metavar=("MIN", "MAX"))
    s.add_argument("--records", type=int, nargs=2, default=(1, 2), metavar=("MIN", "MAX"))
    s.add_argument("--null-rate", type=float, default=0.0)
    s.add_argument("--share-rate", type=float, default=0.0)
    s.add_argument("--annotated", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("bench", help="decode throughput vs. the autoregressive baseline")
    s.add_argument("--corpus", required=True)
    s.add_argument("--schema", required=True)
    s.add_argument("--plan", required=True)
    s.add_argument("--model", help="trained checkpoint; gold graphs when omitted")
    s.add_argument("--mode", choices=["nonautoregressive", "autoregressive-baseline", "both"], default="both")
    s.add_argument("--batch-size", type=int, default=1)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--repetitions", type=int, default=3)
    s.add_argument("--r", type=int)
    s.add_argument("--gamma", type=float)
    s.add_argument("--out")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # report the stage, not a traceback
        print(f"pcgdee {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
