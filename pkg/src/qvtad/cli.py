"""Command line pipeline: synth -> augment -> train -> eval (+ tools).

All randomness funnels through --seed; rerunning any subcommand with the same
inputs and seed reproduces the same output files (timestamps in the history
CSV excepted). Data goes to files in --out-dir, logs to stderr. Exit codes:
0 ok, 1 check/metric failure, 2 usage, 3 missing input file, 4 config error,
5 training divergence, 6 degenerate corpus, 7 malformed data file.
"""

import argparse
import os
import sys

import numpy as np

from . import cliconf, corpus, evaluator, graph_augment, rtsa2, trainer
from .errors import (
    ConfigError,
    EmptyCorpusError,
    EvaluationError,
    FormatError,
    QvtadError,
    StoreError,
    TrainingDiverged,
    VocabularyError,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_CONFIG = 4
EXIT_DIVERGED = 5
EXIT_DEGENERATE = 6
EXIT_BAD_DATA = 7

_SPLIT_SEED_SALT = 101


def _log(msg):
    print(msg, file=sys.stderr)


def _require_files(*paths):
    for p in paths:
        if p is not None and not os.path.exists(p):
            raise FileNotFoundError(p)


def _log_config(resolved, namespaces, seed):
    _log(f"seed={seed}")
    for line in resolved.dump(namespaces):
        _log(line)


def _derive(seed, salt):
    return (seed * 0x9E3779B97F4A7C15 + salt) % (2 ** 63)


def _out(args, name):
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, name)


def cmd_synth(args, resolved):
    settings = resolved.build("synth")
    _log_config(resolved, ["synth"], args.seed)
    result = corpus.synth_corpus(seed=args.seed, **vars(settings))
    result.vocab.save(_out(args, "vocab.txt"))
    corpus.write_embedding_store(_out(args, "store.tsv"), result.store)
    corpus.write_annotations(_out(args, "records.txt"), result.records, result.vocab)
    corpus.write_split_file(_out(args, "split.txt"), result.sections)
    sizes = result.split.sizes()
    _log(f"synth: {len(result.store)} utterances, {len(result.records)} records, "
         f"splits {sizes}")
    return EXIT_OK


def cmd_augment(args, resolved):
    _require_files(args.records, args.vocab)
    cfg = resolved.build("mine")
    _log_config(resolved, ["mine"], args.seed)
    vocab = corpus.AttributeVocab.load(args.vocab)
    records = corpus.parse_annotations(args.records, vocab)
    augmented, stats = graph_augment.augment_all(records, vocab, cfg)
    corpus.write_annotations(_out(args, "augmented.txt"), augmented, vocab, with_origin=True)
    text = stats.to_text(vocab)
    with open(_out(args, "stats.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")
    with open(_out(args, "stats.kv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(stats.to_kv(vocab) + "\n")
    print(text)
    return EXIT_OK


def _build_split_from_files(args, resolved):
    vocab = corpus.AttributeVocab.load(args.vocab)
    store = corpus.load_embedding_store(args.store)
    records = corpus.parse_annotations(args.records, vocab)
    sections = corpus.parse_split_file(args.split)
    data = resolved.build("data")
    split = corpus.build_split(
        records, store, sections, per_pair=data.per_pair,
        swap_augment=data.swap_augment, seed=_derive(args.seed, _SPLIT_SEED_SALT),
        val_per_pair=data.val_per_pair, seen_per_pair=data.seen_per_pair)
    return vocab, store, split


def cmd_train(args, resolved):
    _require_files(args.store, args.records, args.vocab, args.split)
    _log_config(resolved, ["data", "model", "train"], args.seed)
    vocab, store, split = _build_split_from_files(args, resolved)
    mcfg = resolved.build(
        "model",
        embed_dim=corpus.store_dim(store),
        n_attributes=vocab.size,
    )
    tcfg = resolved.build("train", seed=args.seed)
    ablations = trainer.AblationFlags(
        no_augment=args.no_augment, no_rtsa2=args.no_rtsa2, no_value_proj=args.no_value_proj)

    def on_epoch(epoch, params):
        if tcfg.checkpoint_every and epoch % tcfg.checkpoint_every == 0:
            rtsa2.save_checkpoint(_out(args, f"checkpoint_epoch{epoch:03d}.bin"), params)

    try:
        params, history = trainer.train(split, tcfg, mcfg, ablations, on_epoch=on_epoch)
    except TrainingDiverged as exc:
        _log(f"training diverged: {exc}")
        if exc.params is not None:
            rtsa2.save_checkpoint(_out(args, "checkpoint.bin"), exc.params)
            _log("wrote last good checkpoint")
        if exc.history is not None:
            with open(_out(args, "history.csv"), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(exc.history.to_csv())
        return EXIT_DIVERGED
    rtsa2.save_checkpoint(_out(args, "checkpoint.bin"), params)
    with open(_out(args, "history.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(history.to_csv())
    if history.epochs:
        best = max(e.val_acc for e in history.epochs)
        _log(f"train: {len(history.epochs)} epochs, best val_acc {best:.4f}")
    return EXIT_OK


def cmd_eval(args, resolved):
    _require_files(args.checkpoint, args.store, args.records, args.vocab, args.split)
    _log_config(resolved, ["data"], args.seed)
    vocab, store, split = _build_split_from_files(args, resolved)
    params = rtsa2.load_checkpoint(args.checkpoint)
    report = evaluator.evaluate(params, split)
    text = report.to_text(vocab)
    with open(_out(args, "report.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    with open(_out(args, "report.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_csv(vocab))
    print(text, end="")
    empty = report.empty_cells()
    if empty:
        _log(f"eval: empty report cells: {empty}")
        return EXIT_FAIL
    return EXIT_OK


def cmd_gradcheck(args, resolved):
    from . import ndcompute as nd

    mcfg = resolved.build("model")
    _log_config(resolved, ["model"], args.seed)
    tol = args.tol
    worst = 0.0
    for trial in range(args.trials):
        seed = _derive(args.seed, trial)
        params = rtsa2.init_params(mcfg, seed=seed)
        rng = np.random.Generator(np.random.PCG64(_derive(seed, 1)))
        ea = rng.normal(size=mcfg.embed_dim)
        eb = rng.normal(size=mcfg.embed_dim)
        attr = int(rng.integers(mcfg.n_attributes))
        label = int(rng.integers(2))

        def f(tape):
            probs, _ = rtsa2.forward_batch(
                tape, params, ea.reshape(1, -1), eb.reshape(1, -1), train_mode=False)
            return rtsa2.masked_loss(tape, probs, [attr], [label])

        err = nd.grad_check(f, [t for _, t in params.trainable_items()])
        worst = max(worst, err)
        _log(f"gradcheck trial {trial}: max relative error {err:.3e}")
    print(f"gradcheck: worst relative error {worst:.3e} over {args.trials} trials "
          f"({'PASS' if worst < tol else 'FAIL'} at tol {tol:g})")
    return EXIT_OK if worst < tol else EXIT_FAIL


def cmd_inspect(args, resolved):
    _require_files(args.checkpoint, args.store)
    _log(f"seed={args.seed}")
    params = rtsa2.load_checkpoint(args.checkpoint)
    store = corpus.load_embedding_store(args.store)
    try:
        utt_a, utt_b = args.pair.split(",")
    except ValueError:
        raise ConfigError(f"--pair expects UTT_A,UTT_B, got {args.pair!r}") from None
    for utt in (utt_a, utt_b):
        if utt not in store:
            raise StoreError(f"utterance {utt!r} not in store")
    trace = rtsa2.forward(store[utt_a], store[utt_b], params)

    vocab = corpus.AttributeVocab.load(args.vocab) if args.vocab else None
    print(f"pair: A={utt_a} B={utt_b}")
    print(f"gamma: {trace.gamma:.6f}")
    print(f"|delta_hat|: {float(np.linalg.norm(trace.delta_hat)):.6f}")
    for h, m in enumerate(trace.attn_maps):
        lam = params.head_lambda(h)
        print(f"head {h} (lambda={lam:.4f}) attention rows "
              f"[A: {m[0, 0]:+.4f} {m[0, 1]:+.4f}] [B: {m[1, 0]:+.4f} {m[1, 1]:+.4f}]")
    order = np.argsort(trace.probs)[::-1]
    if args.attribute:
        if vocab is None:
            raise ConfigError("--attribute needs --vocab")
        k = vocab.index_of(args.attribute)
        print(f"p(B stronger, {args.attribute}): {trace.probs[k]:.6f}")
    else:
        for k in order[:5]:
            name = vocab.name_of(int(k)) if vocab else f"attr#{k}"
            print(f"p(B stronger, {name}): {trace.probs[k]:.6f}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qvtad",
        description="Relative timbre attribute pipeline: synthetic corpora, "
                    "graph pair mining, comparator training and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_dir=True):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("--seed", type=int, default=0)
        if out_dir:
            p.add_argument("--out-dir", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    common(p)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("augment", help="mine transitive pairs from annotations")
    common(p)
    p.add_argument("--records", required=True)
    p.add_argument("--vocab", required=True)
    p.set_defaults(fn=cmd_augment)

    p = sub.add_parser("train", help="train the comparator")
    common(p)
    p.add_argument("--store", required=True, help="embedding manifest (.tsv)")
    p.add_argument("--records", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--no-augment", action="store_true",
                   help="train on origin=annotated records only")
    p.add_argument("--no-rtsa2", action="store_true",
                   help="bypass the differential block (plain concatenation)")
    p.add_argument("--no-value-proj", action="store_true",
                   help="heads read raw embedding slices instead of value projections")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test splits")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--records", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--split", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser(
        "gradcheck",
        help="finite-difference check of the full model",
        description="Checks analytic gradients of the full forward + masked "
                    "BCE against central differences. Without --config/--set "
                    "a small desk-sized model configuration is used.")
    common(p, out_dir=False)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(fn=cmd_gradcheck)

    p = sub.add_parser("inspect", help="dump attention maps and probabilities for one pair")
    common(p, out_dir=False)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--pair", required=True, metavar="UTT_A,UTT_B")
    p.add_argument("--vocab")
    p.add_argument("--attribute", help="report this attribute only")
    p.set_defaults(fn=cmd_inspect)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        resolved = cliconf.load_resolved(args.config, args.set)
        # model defaults for gradcheck stay desk-sized unless configured
        if args.command == "gradcheck" and not args.config and not args.set:
            resolved = cliconf.load_resolved(None, [
                "model.embed_dim=16", "model.n_attributes=6", "model.n_heads=2",
                "model.scale_hidden=8", "model.predictor_hidden=16",
                "model.dropout_rate=0.0"])
        return args.fn(args, resolved)
    except FileNotFoundError as exc:
        _log(f"missing input file: {exc}")
        return EXIT_MISSING_FILE
    except ConfigError as exc:
        _log(f"config error: {exc}")
        return EXIT_CONFIG
    except EmptyCorpusError as exc:
        _log(f"degenerate corpus: {exc}")
        return EXIT_DEGENERATE
    except (FormatError, StoreError, VocabularyError) as exc:
        _log(f"bad data: {exc}")
        return EXIT_BAD_DATA
    except EvaluationError as exc:
        _log(f"evaluation error: {exc}")
        return EXIT_FAIL
    except TrainingDiverged as exc:
        _log(f"training diverged: {exc}")
        return EXIT_DIVERGED
    except QvtadError as exc:
        _log(f"error: {exc}")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
