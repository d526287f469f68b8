"""Command-line interface: generate | train | eval | infer | oracle.

Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.  The
PROBR_LOG environment variable (error | info | debug) sets the stderr log
level.  All commands are reproducible from their flags and seeds; nothing
besides log lines depends on the wall clock.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import pgm
from .data import GenConfig, generate_examples, read_examples, write_examples
from .decode import DecodeConfig, infer
from .errors import ProofQAError, UsageError
from .metrics import evaluate, format_table, report
from .model import (EncoderConfig, TrainConfig, grad, load_checkpoint, loss,
                    save_checkpoint, train_model, VARIANTS)
from .theory import parse_query, theory_from_texts

log = logging.getLogger("proofqa")

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="proofqa",
                     description="joint answer and proof prediction over rule text")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a dataset file", parents=[])
    p.add_argument("--depth", type=int, default=1, help="maximum query depth")
    p.add_argument("--num", type=int, required=True, help="number of examples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output JSONL path")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("train", help="fit a model and write a checkpoint")
    p.add_argument("--train", required=True, help="training JSONL path")
    p.add_argument("--dev", default=None, help="dev JSONL for best-epoch selection")
    p.add_argument("--model", required=True, help="checkpoint output path")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--clip", type=float, default=1.0)
    p.add_argument("--variant", choices=VARIANTS, default="base")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True, help="evaluation JSONL path")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--per-depth", action="store_true", dest="per_depth",
                   help="also print the per-depth table")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("infer", help="answer one query over a theory file")
    p.add_argument("--model", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("theory", help="text file with one statement per line")
    p.add_argument("query", help='query sentence, e.g. "Alan is big."')
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("oracle", help="run enumeration and gradient self-checks")
    p.add_argument("--m", type=int, default=3, help="node count for enumeration")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=_cmd_oracle)
    return parser


def _cmd_generate(args) -> int:
    cfg = GenConfig(num_examples=args.num, max_depth=args.depth, seed=args.seed)
    examples = generate_examples(cfg)
    write_examples(args.out, examples)
    log.info("wrote %d examples to %s", len(examples), args.out)
    return 0


def _cmd_train(args) -> int:
    train_set = read_examples(args.train)
    dev_set = read_examples(args.dev) if args.dev else None
    config = TrainConfig(epochs=args.epochs, batch_size=args.batch,
                         learning_rate=args.lr, grad_clip=args.clip,
                         variant=args.variant, seed=args.seed)
    encoder = EncoderConfig(seed=args.seed)
    result = train_model(train_set, dev_set, config, encoder)
    save_checkpoint(args.model, result.params, config, result.moments)
    log_path = str(args.model) + ".log.jsonl"
    with open(log_path, "w", encoding="utf-8", newline="\n") as fh:
        for row in result.history:
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")
    log.info("wrote checkpoint %s and metrics log %s", args.model, log_path)
    return 0


def _cmd_eval(args) -> int:
    params, _cfg, _mom = load_checkpoint(args.model)
    test_set = read_examples(args.test)
    dcfg = DecodeConfig(node_threshold=args.threshold)
    predictions = []
    for ex in test_set:
        pred = infer(params, ex.theory, ex.query, dcfg)
        pred.example_id = ex.id
        predictions.append(pred)
    metrics = evaluate(predictions, test_set)
    print(json.dumps(report(metrics), indent=2))
    if args.per_depth:
        print(format_table(metrics))
    return 0


def _cmd_infer(args) -> int:
    params, _cfg, _mom = load_checkpoint(args.model)
    with open(args.theory, encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    theory = theory_from_texts(lines)
    query = parse_query(args.query)
    pred = infer(params, theory, query, DecodeConfig(node_threshold=args.threshold))
    print(f"answer: {'true' if pred.answer else 'false'}")
    print("proof nodes: " + " ".join(sorted(pred.proof.nodes)))
    for src, dst in sorted(pred.proof.edges):
        print(f"proof edge: {src} -> {dst}")
    return 0


def _cmd_oracle(args) -> int:
    rng = np.random.default_rng(args.seed)
    cond_err = 0.0
    pl_err = 0.0
    for _ in range(args.trials):
        lp = pgm.LogPotentials.random(rng, args.m)
        y = pgm.Assignment.random(rng, args.m)
        for var in _all_vars(args.m):
            exact = pgm.exact_conditional(lp, y, var)
            if var[0] == "a":
                fast = pgm.conditional_answer(lp, y.v, y.e)
            elif var[0] == "v":
                fast = pgm.conditional_node(lp, y, var[1])
            else:
                fast = pgm.conditional_edge(lp, y, var[1], var[2])
            cond_err = max(cond_err, float(np.abs(exact - fast).max()))
        pl = pgm.pseudolikelihood_log(lp, y)
        pl_exact = _pseudolikelihood_via_exact(lp, y)
        pl_err = max(pl_err, abs(pl - pl_exact))
    grad_err = _gradient_check(args.seed)
    print(f"max conditional error: {cond_err:.3e}")
    print(f"max pseudolikelihood error: {pl_err:.3e}")
    print(f"max gradient relative error: {grad_err:.3e}")
    ok = cond_err <= 1e-9 and pl_err <= 1e-8 and grad_err <= 1e-4
    if not ok:
        log.error("oracle tolerances exceeded")
        return 2
    return 0


def _all_vars(m: int):
    yield ("a",)
    for i in range(m):
        yield ("v", i)
    for i in range(m):
        for j in range(m):
            if i != j:
                yield ("e", i, j)


def _pseudolikelihood_via_exact(lp, y) -> float:
    total = 0.0
    for var in _all_vars(lp.m):
        dist = pgm.exact_conditional(lp, y, var)
        if var[0] == "a":
            total += float(np.log(dist[y.a]))
        elif var[0] == "v":
            total += float(np.log(dist[y.v[var[1]]]))
        else:
            total += float(np.log(dist[y.e[pgm.pair_index(var[1], var[2], lp.m)]]))
    return total


def _gradient_check(seed: int, examples: int = 3, samples: int = 25) -> float:
    """Central finite differences against the analytic gradient."""
    from .data import generate_example

    rng = np.random.default_rng(seed)
    enc = EncoderConfig(hash_dim=256, embed_dim=8, hidden_dim=8, seed=seed)
    cfg = GenConfig(num_examples=examples, max_depth=1, facts_range=(1, 2),
                    rules_range=(1, 2), seed=seed)
    worst = 0.0
    h = 1e-4
    for idx in range(examples):
        ex = generate_example(cfg, idx)
        from .model import ModelParams
        params = ModelParams.init(enc)
        for name in params.arrays:
            params.arrays[name] = rng.uniform(-0.3, 0.3,
                                              size=params.arrays[name].shape)
        for variant in VARIANTS:
            g = grad(params, ex, variant)
            for _ in range(samples):
                name = list(params.arrays)[int(rng.integers(len(params.arrays)))]
                flat = params.arrays[name].ravel()
                k = int(rng.integers(flat.size))
                keep = flat[k]
                flat[k] = keep + h
                up = loss(params, ex, variant)
                flat[k] = keep - h
                down = loss(params, ex, variant)
                flat[k] = keep
                fd = (up - down) / (2 * h)
                an = g[name].ravel()[k]
                denom = max(abs(fd), abs(an), 1e-6)
                worst = max(worst, abs(fd - an) / denom)
    return worst


def main(argv=None) -> int:
    level = os.environ.get("PROBR_LOG", "info").lower()
    try:
        if level not in _LOG_LEVELS:
            raise UsageError(f"PROBR_LOG must be one of {sorted(_LOG_LEVELS)}")
        logging.basicConfig(level=_LOG_LEVELS[level],
                            format="%(levelname)s %(name)s: %(message)s",
                            stream=sys.stderr)
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except ProofQAError as exc:
        log.error("%s", exc)
        return 2
    except OSError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
