"""Command-line interface.

Every subcommand accepts ``--config FILE`` pointing at a JSON object whose
keys match the flag names (underscored); explicit flags override file
values.  Exit codes: 0 on success, 2 for input problems (bad files, bad
flags, missing data), 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter

import numpy as np

from . import aligneval, aligntrain, harness, scorer, vocab as vocab_mod
from .ter import TERConfig, ter as compute_ter
from .core import ScoreSeries
from .dataio import (
    WordAlignment,
    format_pharaoh,
    read_dataset,
    read_embeddings,
    read_pharaoh_file,
    write_dataset,
    write_pharaoh_file,
)
from .errors import InputDataError, NumericalError

_REQUIRED = object()


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as f:
        loaded = json.load(f)
    if not isinstance(loaded, dict):
        raise InputDataError(f"{path}: config file must hold a JSON object")
    return loaded


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge CLI flags over config-file values over defaults."""
    file_cfg = _load_config(getattr(args, "config", None))
    merged = {}
    missing = []
    for key, default in defaults.items():
        value = getattr(args, key, None)
        if value is None:
            value = file_cfg.get(key, default)
        if value is _REQUIRED:
            missing.append(key)
            continue
        merged[key] = value
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise InputDataError(f"missing required value(s): {flags}")
    return merged


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)


def _read_score_file(path: str) -> tuple[list[str], list[float]]:
    """Two-column id<TAB>value lines, as written by `score` and `ter`."""
    ids: list[str] = []
    values: list[float] = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise InputDataError(f"{path}:{line_no}: expected id<TAB>value")
            try:
                values.append(float(parts[1]))
            except ValueError:
                raise InputDataError(
                    f"{path}:{line_no}: value {parts[1]!r} is not a number"
                ) from None
            ids.append(parts[0])
    if not ids:
        raise InputDataError(f"{path}: no scores found")
    return ids, values


def _paired_series(pred_path: str, gold_path: str) -> tuple[ScoreSeries, ScoreSeries]:
    pred_ids, pred_values = _read_score_file(pred_path)
    gold_ids, gold_values = _read_score_file(gold_path)
    gold_map = dict(zip(gold_ids, gold_values))
    if len(gold_map) != len(gold_ids):
        raise InputDataError(f"{gold_path}: duplicate ids")
    try:
        aligned = [gold_map[i] for i in pred_ids]
    except KeyError as e:
        raise InputDataError(f"{gold_path}: missing id {e.args[0]}") from None
    return ScoreSeries(values=pred_values), ScoreSeries(values=aligned)


def _tokenize(text: str) -> list[str]:
    return vocab_mod.DEFAULT_POLICY.tokenize(text)


# --- subcommand implementations --------------------------------------------

_METRICS = {"p": "precision", "r": "recall", "f1": "f1"}


def _cmd_score(args) -> int:
    cfg = _resolve(args, {
        "dataset": _REQUIRED, "src_emb": _REQUIRED, "hyp_emb": _REQUIRED,
        "layer": None, "metric": "r", "vocab": None,
        "unk_symbol": vocab_mod.DEFAULT_UNK, "out": "-",
    })
    records = read_dataset(cfg["dataset"])
    src_set = read_embeddings(cfg["src_emb"])
    hyp_set = read_embeddings(cfg["hyp_emb"])
    layer = cfg["layer"] if cfg["layer"] is not None else src_set.layer
    vocabulary = None
    if cfg["vocab"]:
        # Words present in the file are in-vocabulary; build-vocab already
        # applied the frequency rule before writing.
        vocabulary = vocab_mod.load_vocabulary(cfg["vocab"], threshold=1, cmp="ge")
    sc = scorer.ScorerConfig(
        layer=int(layer),
        score_kind=_METRICS.get(cfg["metric"], cfg["metric"]),
        apply_unk=vocabulary is not None,
    )
    series = scorer.score_dataset(records, src_set, hyp_set, sc, vocab=vocabulary)
    lines = [f"{r.id}\t{v!r}" for r, v in zip(records, series.values)]
    _write_text(cfg["out"], "\n".join(lines) + "\n")
    return 0


def _cmd_build_vocab(args) -> int:
    cfg = _resolve(args, {
        "corpus": _REQUIRED, "min_count": 2, "cmp": "gt", "out": _REQUIRED,
    })
    with open(cfg["corpus"], "rb") as f:
        vocabulary = vocab_mod.build_vocabulary(
            f, threshold=int(cfg["min_count"]), cmp=cfg["cmp"]
        )
    # The written file is the vocabulary: words failing the rule are dropped
    # here so that replace-unk does not need the threshold again.
    kept = Counter({w: vocabulary.counts[w] for w in vocabulary.members()})
    vocab_mod.write_vocabulary(
        vocab_mod.Vocabulary(
            counts=kept,
            threshold=vocabulary.threshold,
            cmp=vocabulary.cmp,
            policy_tag=vocabulary.policy_tag,
        ),
        cfg["out"],
    )
    return 0


def _cmd_replace_unk(args) -> int:
    cfg = _resolve(args, {"dataset": _REQUIRED, "vocab": _REQUIRED, "out": _REQUIRED})
    records = read_dataset(cfg["dataset"])
    # Words present in the file are in-vocabulary; build-vocab already applied
    # the frequency rule before writing.
    vocabulary = vocab_mod.load_vocabulary(cfg["vocab"], threshold=1, cmp="ge")
    policy = vocab_mod.policy_from_tag(vocabulary.policy_tag)
    replaced = []
    for rec in records:
        words = policy.tokenize(rec.hypothesis)
        result = vocab_mod.replace_untranslated(words, vocabulary)
        replaced.append(
            type(rec)(
                id=rec.id,
                source=rec.source,
                hypothesis=" ".join(result.tokens),
                post_edit=rec.post_edit,
                gold_score=rec.gold_score,
            )
        )
    write_dataset(replaced, cfg["out"])
    return 0


def _cmd_ter(args) -> int:
    cfg = _resolve(args, {"dataset": _REQUIRED, "case_sensitive": False, "out": "-"})
    records = read_dataset(cfg["dataset"])
    tc = TERConfig(case_sensitive=bool(cfg["case_sensitive"]))
    lines = []
    hters = []
    total_edits = 0
    total_ref = 0
    for rec in records:
        if rec.post_edit is None:
            raise InputDataError(f"record {rec.id}: no post_edit column for TER")
        result = compute_ter(_tokenize(rec.hypothesis), _tokenize(rec.post_edit), tc)
        lines.append(f"{rec.id}\t{result.ter!r}")
        hters.append(result.ter)
        total_edits += result.total_edits
        total_ref += result.ref_length
    _write_text(cfg["out"], "\n".join(lines) + "\n")
    print(f"mean_hter\t{float(np.mean(hters))!r}", file=sys.stderr)
    print(f"corpus_hter\t{total_edits / total_ref!r}", file=sys.stderr)
    return 0


def _cmd_train_align(args) -> int:
    cfg = _resolve(args, {
        "corpus": _REQUIRED, "alignments": _REQUIRED,
        "steps": 100_000, "lr": 1e-4, "batch": 32,
        "temperature": 0.1, "lambda_reg": 1.0, "seed": 0, "dim": 16,
        "checkpoint_out": _REQUIRED, "history_out": None,
    })
    records = read_dataset(cfg["corpus"])
    gold = read_pharaoh_file(cfg["alignments"], possible_as_sure=True)
    if len(gold) != len(records):
        raise InputDataError(
            f"{cfg['alignments']}: {len(gold)} alignment lines for {len(records)} sentences"
        )
    src_tokens = [_tokenize(r.source) for r in records]
    tgt_tokens = [_tokenize(r.hypothesis) for r in records]
    words = sorted({w for s in src_tokens for w in s} | {w for t in tgt_tokens for w in t})
    word_id = {w: i for i, w in enumerate(words)}
    corpus = []
    for src, tgt, align in zip(src_tokens, tgt_tokens, gold):
        pairs = aligntrain.expand_to_subwords(
            align, list(range(len(src))), list(range(len(tgt)))
        )
        corpus.append(
            aligntrain.SentencePair(
                src_ids=[word_id[w] for w in src],
                tgt_ids=[word_id[w] for w in tgt],
                pairs=pairs,
            )
        )
    params = aligntrain.ToyEncoderParams.initialize(
        len(words), int(cfg["dim"]), seed=int(cfg["seed"])
    )
    train_cfg = aligntrain.TrainConfig(
        learning_rate=float(cfg["lr"]), batch_size=int(cfg["batch"]),
        steps=int(cfg["steps"]), seed=int(cfg["seed"]),
    )
    loss_cfg = aligntrain.LossConfig(
        temperature=float(cfg["temperature"]), lambda_reg=float(cfg["lambda_reg"])
    )
    params, history = aligntrain.train(corpus, params, train_cfg, loss_cfg)
    aligntrain.save_checkpoint(params, cfg["checkpoint_out"], vocab_words=words)
    if cfg["history_out"]:
        aligntrain.save_history(history, cfg["history_out"])
    if history:
        last = history[-1]
        print(
            f"steps\t{last.step}\nfinal_total\t{last.total!r}",
            file=sys.stderr,
        )
    return 0


def _cmd_extract_align(args) -> int:
    cfg = _resolve(args, {
        "src_emb": _REQUIRED, "tgt_emb": _REQUIRED, "policy": "mutual", "out": "-",
    })
    src_set = read_embeddings(cfg["src_emb"])
    tgt_set = read_embeddings(cfg["tgt_emb"])
    sids = sorted({s.sid for s in src_set.sentences} & {s.sid for s in tgt_set.sentences})
    if not sids:
        raise InputDataError("embedding files share no sentence ids")
    predicted = aligneval.align_corpus(src_set, tgt_set, sids, method=cfg["policy"])
    alignments = [
        WordAlignment(sure=predicted[sid], possible=predicted[sid]) for sid in sids
    ]
    if cfg["out"] == "-":
        sys.stdout.write("".join(format_pharaoh(a) + "\n" for a in alignments))
    else:
        write_pharaoh_file(alignments, cfg["out"])
    return 0


def _cmd_aer(args) -> int:
    cfg = _resolve(args, {"pred": _REQUIRED, "gold": _REQUIRED})
    pred = read_pharaoh_file(cfg["pred"], possible_as_sure=True)
    gold = read_pharaoh_file(cfg["gold"])
    if len(pred) != len(gold):
        raise InputDataError(
            f"prediction has {len(pred)} lines, gold has {len(gold)}"
        )
    value = aligneval.corpus_aer(
        {i: frozenset(a.sure) for i, a in enumerate(pred)},
        dict(enumerate(gold)),
    )
    print(f"aer\t{value!r}")
    return 0


def _cmd_layer_sweep(args) -> int:
    cfg = _resolve(args, {
        "src_emb": _REQUIRED, "tgt_emb": _REQUIRED, "gold": _REQUIRED,
        "layers": _REQUIRED, "policy": "mutual", "out": "-",
    })
    layers = [int(x) for x in str(cfg["layers"]).split(",") if x != ""]
    gold = dict(enumerate(read_pharaoh_file(cfg["gold"])))
    layer_sets = {}
    for layer in layers:
        src_set = read_embeddings(str(cfg["src_emb"]).format(layer=layer))
        tgt_set = read_embeddings(str(cfg["tgt_emb"]).format(layer=layer))
        layer_sets[layer] = (src_set, tgt_set)
    results = aligneval.layer_sweep(layer_sets, gold, method=cfg["policy"])
    lines = ["layer,aer"] + [f"{layer},{results[layer]!r}" for layer in sorted(results)]
    _write_text(cfg["out"], "\n".join(lines) + "\n")
    return 0


def _cmd_evaluate(args) -> int:
    cfg = _resolve(args, {"pred": _REQUIRED, "gold": _REQUIRED})
    pred, gold = _paired_series(cfg["pred"], cfg["gold"])
    report = harness.evaluate(pred, gold, config=cfg)
    sys.stdout.write(harness.report_to_csv(report))
    sys.stderr.write(harness.format_report(report))
    return 0


def _cmd_stability(args) -> int:
    cfg = _resolve(args, {
        "pred": _REQUIRED, "gold": _REQUIRED, "sizes": _REQUIRED,
        "num_seeds": 50, "seed": 0, "out": "-",
    })
    pred, gold = _paired_series(cfg["pred"], cfg["gold"])
    sizes = [int(x) for x in str(cfg["sizes"]).split(",") if x != ""]
    curve = harness.size_stability(
        pred, gold, sizes, num_seeds=int(cfg["num_seeds"]), seed=int(cfg["seed"])
    )
    _write_text(cfg["out"], harness.curve_to_csv(curve))
    sys.stderr.write(harness.format_curve(curve))
    return 0


def _cmd_export_embeddings(args) -> int:
    cfg = _resolve(args, {
        "input": _REQUIRED, "encoder": _REQUIRED, "layers": _REQUIRED,
        "out_prefix": _REQUIRED, "vocab": None,
        "unk_symbol": vocab_mod.DEFAULT_UNK, "batch_size": 8,
    })
    try:
        import qebridge
    except ImportError:
        raise InputDataError(
            "export-embeddings needs the encoder bridge package (qebridge); "
            "install it from the bridge/ directory"
        ) from None
    request = qebridge.ExportRequest(
        input_path=cfg["input"],
        encoder=cfg["encoder"],
        layers=[int(x) for x in str(cfg["layers"]).split(",") if x != ""],
        out_prefix=cfg["out_prefix"],
        vocab_path=cfg["vocab"],
        unk_symbol=cfg["unk_symbol"],
        batch_size=int(cfg["batch_size"]),
    )
    for path in qebridge.export_embeddings(request):
        print(path)
    return 0


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embqe",
        description="Reference-free MT quality estimation from contextual embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    bool_opt = argparse.BooleanOptionalAction

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file with defaults for any flag")
        p.set_defaults(func=func)
        return p

    p = add("score", _cmd_score, "score a dataset by greedy embedding matching")
    p.add_argument("--dataset")
    p.add_argument("--src-emb")
    p.add_argument("--hyp-emb")
    p.add_argument("--layer", type=int, help="defaults to the layer stored in the files")
    p.add_argument("--metric", choices=["p", "r", "f1"])
    p.add_argument("--vocab")
    p.add_argument("--unk-symbol")
    p.add_argument("--out")

    p = add("build-vocab", _cmd_build_vocab, "count words and write a vocabulary file")
    p.add_argument("--corpus")
    p.add_argument("--min-count", type=int)
    p.add_argument("--cmp", choices=["gt", "ge"])
    p.add_argument("--out")

    p = add("replace-unk", _cmd_replace_unk, "replace out-of-vocabulary hypothesis words")
    p.add_argument("--dataset")
    p.add_argument("--vocab")
    p.add_argument("--out")

    p = add("ter", _cmd_ter, "label a dataset with edit rates against post-edits")
    p.add_argument("--dataset")
    p.add_argument("--case-sensitive", action=bool_opt)
    p.add_argument("--out")

    p = add("train-align", _cmd_train_align, "contrastive alignment training of the toy encoder")
    p.add_argument("--corpus")
    p.add_argument("--alignments")
    p.add_argument("--steps", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--temperature", type=float)
    p.add_argument("--lambda", dest="lambda_reg", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--checkpoint-out")
    p.add_argument("--history-out")

    p = add("extract-align", _cmd_extract_align, "extract word alignments from embeddings")
    p.add_argument("--src-emb")
    p.add_argument("--tgt-emb")
    p.add_argument("--policy", choices=["mutual", "greedy"])
    p.add_argument("--out")

    p = add("aer", _cmd_aer, "alignment error rate of predictions against gold")
    p.add_argument("--pred")
    p.add_argument("--gold")

    p = add("layer-sweep", _cmd_layer_sweep, "corpus AER per encoder layer")
    p.add_argument("--src-emb", help="path template with {layer}")
    p.add_argument("--tgt-emb", help="path template with {layer}")
    p.add_argument("--gold")
    p.add_argument("--layers", help="comma-separated layer list")
    p.add_argument("--policy", choices=["mutual", "greedy"])
    p.add_argument("--out")

    p = add("evaluate", _cmd_evaluate, "Pearson correlation of scores against gold")
    p.add_argument("--pred")
    p.add_argument("--gold")

    p = add("stability", _cmd_stability, "correlation spread across subset sizes")
    p.add_argument("--pred")
    p.add_argument("--gold")
    p.add_argument("--sizes", help="comma-separated subset sizes")
    p.add_argument("--num-seeds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = add("export-embeddings", _cmd_export_embeddings,
            "export encoder hidden states via the bridge package")
    p.add_argument("--input")
    p.add_argument("--encoder")
    p.add_argument("--layers", help="comma-separated layer list")
    p.add_argument("--out-prefix")
    p.add_argument("--vocab", help="replace out-of-vocabulary words before encoding")
    p.add_argument("--unk-symbol")
    p.add_argument("--batch-size", type=int)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except InputDataError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
