"""Command-line entry point.

Subcommands: synth, convert, train, score, eval, ensemble, gradcheck.
Exit codes: 0 success, 1 data error, 2 configuration/usage error.
Diagnostics go to stderr; machine-readable output only to declared files.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from hybridref import __version__
from hybridref.artifacts import (
    RunDirectorySink,
    load_model_dir,
    read_prediction_file,
    write_run_artifacts,
)
from hybridref.config import RunConfig
from hybridref.data import (
    SynthConfig,
    build_synthetic_corpus,
    convert_corpus,
    load_instances,
    read_nli_tsv,
    write_instances,
    write_report,
)
from hybridref.data.instances import Candidate, Instance, Pronoun
from hybridref.encoder import EncoderConfig
from hybridref.errors import ConfigError, DataError, HybridrefError, ParameterError
from hybridref.evaluation import eval_classification, eval_ranking, formulation_comparison
from hybridref.losses import loss_total
from hybridref.model import HybridModel, ScoreMode, score_all_candidates, score_candidate
from hybridref.tensor import finite_difference_check
from hybridref.training import ensemble_vote, train
from hybridref.training.loop import score_mode_for


def _formatter(prog):
    return argparse.ArgumentDefaultsHelpFormatter(prog, width=96)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None,
                        help="global random seed (overrides the config file)")
    parser.add_argument("--config", default=None, help="run configuration JSON file")
    parser.add_argument("--verbose", action="store_true", help="progress messages on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridref",
        description="Pronoun resolution with a masked-LM head and a similarity head "
                    "over a shared transformer encoder.",
        formatter_class=_formatter,
    )
    parser.add_argument("--version", action="version", version=f"hybridref {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("synth", help="generate the seeded synthetic corpus",
                       formatter_class=_formatter)
    _add_common(p)
    p.add_argument("--size", type=int, default=200, help="number of training instances")
    p.add_argument("--dev-size", type=int, default=50, help="number of dev instances")
    p.add_argument("--test-size", type=int, default=0, help="number of test instances")
    p.add_argument("--out", required=True, help="training instances JSONL path")
    p.add_argument("--dev-out", default=None, help="dev instances JSONL path")
    p.add_argument("--test-out", default=None, help="test instances JSONL path")

    p = sub.add_parser("convert", help="convert NLI TSV pairs into instances",
                       formatter_class=_formatter)
    _add_common(p)
    p.add_argument("--input", required=True, help="TSV with columns index, sentence1, sentence2[, label]")
    p.add_argument("--output", required=True, help="instances JSONL path")
    p.add_argument("--report", default=None, help="conversion report JSON path")

    p = sub.add_parser("train", help="train on (positive, negative) candidate pairs",
                       formatter_class=_formatter)
    _add_common(p)
    p.add_argument("--train", required=True, dest="train_path", help="training instances JSONL")
    p.add_argument("--dev", required=True, dest="dev_path", help="dev instances JSONL")
    p.add_argument("--out", required=True, help="run directory to create")
    p.add_argument("--ablation", choices=["full", "no_ssm", "no_mlm", "no_rank"],
                   default=None, help="component ablation (overrides the config file)")
    p.add_argument("--max-epochs", type=int, default=None, help="override training.max_epochs")
    p.add_argument("--batch-size", type=int, default=None, help="override training.batch_size")
    p.add_argument("--learning-rate", type=float, default=None, help="override training.learning_rate")
    p.add_argument("--warmup-steps", type=int, default=None, help="override training.warmup_steps")

    p = sub.add_parser("score", help="score every candidate of every instance",
                       formatter_class=_formatter)
    _add_common(p)
    p.add_argument("--ckpt", required=True, help="run directory from `train`")
    p.add_argument("--data", required=True, help="instances JSONL to score")
    p.add_argument("--out", required=True, help="scores JSONL path")
    p.add_argument("--which", default="selected",
                   help="checkpoint to load: selected, swa, or an epoch number")
    p.add_argument("--mode", choices=["full", "mlm_only", "ssm_only"], default="full",
                   help="scoring mode (head ablations)")

    p = sub.add_parser("eval", help="ranking or classification evaluation",
                       formatter_class=_formatter)
    _add_common(p)
    p.add_argument("--ckpt", required=True, help="run directory from `train`")
    p.add_argument("--data", required=True, help="instances JSONL to evaluate on")
    p.add_argument("--formulation", choices=["ranking", "classification", "both"],
                   default="ranking", help="task formulation")
    p.add_argument("--dev", default=None, dest="dev_path",
                   help="dev instances JSONL (threshold fitting; classification/both)")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--which", default="selected",
                   help="checkpoint to load: selected, swa, or an epoch number")
    p.add_argument("--mode", choices=["full", "mlm_only", "ssm_only"], default="full",
                   help="scoring mode (head ablations)")

    p = sub.add_parser("ensemble", help="majority-vote the last epochs' predictions",
                       formatter_class=_formatter)
    _add_common(p)
    p.add_argument("--pred-dir", required=True, help="run directory containing predictions/")
    p.add_argument("--window", type=int, default=6, help="number of trailing epochs to vote over")
    p.add_argument("--out", required=True, help="final predictions JSONL path")

    p = sub.add_parser("gradcheck", help="finite-difference check of the combined loss",
                       formatter_class=_formatter)
    _add_common(p)
    p.add_argument("--rel-tol", type=float, default=1e-4, help="relative error tolerance")
    p.add_argument("--step", type=float, default=1e-5, help="finite-difference step size")

    return parser


def _log(args, message: str) -> None:
    if args.verbose:
        print(message, file=sys.stderr)


def _load_run_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {"seed": args.seed}
    for name in ("ablation", "max_epochs", "batch_size", "learning_rate", "warmup_steps"):
        if hasattr(args, name):
            overrides[name] = getattr(args, name)
    return cfg.override(**overrides)


def _cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else 0
    splits = build_synthetic_corpus(SynthConfig(
        n_train=args.size, n_dev=args.dev_size, n_test=args.test_size, seed=seed))
    n = write_instances(args.out, splits["train"])
    _log(args, f"wrote {n} training instances to {args.out}")
    if args.dev_out:
        n = write_instances(args.dev_out, splits["dev"])
        _log(args, f"wrote {n} dev instances to {args.dev_out}")
    if args.test_out:
        n = write_instances(args.test_out, splits["test"])
        _log(args, f"wrote {n} test instances to {args.test_out}")
    return 0


def _cmd_convert(args) -> int:
    instances, report = convert_corpus(read_nli_tsv(args.input))
    write_instances(args.output, instances)
    if args.report:
        write_report(args.report, report)
    _log(args, f"converted {report.n_converted}/{report.n_pairs} pairs into "
               f"{report.n_instances} instances ({report.n_failed} failures)")
    return 0


def _cmd_train(args) -> int:
    run_cfg = _load_run_config(args)
    train_instances = load_instances(args.train_path)
    dev_instances = load_instances(args.dev_path)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sink = RunDirectorySink(out, dev_instances)
    try:
        result = train(train_instances, dev_instances, run_cfg.encoder, run_cfg.training, sink=sink)
    finally:
        sink.close()
    write_run_artifacts(out, result, run_cfg.to_dict())
    _log(args, f"selected epoch {result.state.best_epoch} "
               f"(dev accuracy {result.state.best_dev_accuracy:.3f}); artifacts in {out}")
    return 0


def _cmd_score(args) -> int:
    model, vocab = load_model_dir(args.ckpt, args.which)
    instances = load_instances(args.data)
    mode = ScoreMode(args.mode)
    with open(args.out, "w", encoding="utf-8") as fh:
        for inst in instances:
            for i, pair in enumerate(score_all_candidates(model, vocab, inst, mode)):
                fh.write(json.dumps({
                    "instance_id": inst.id,
                    "candidate_index": i,
                    "p_mlm": pair.p_mlm,
                    "p_ssm": pair.p_ssm,
                    "score": pair.combined,
                }) + "\n")
    _log(args, f"scored {len(instances)} instances into {args.out}")
    return 0


def _cmd_eval(args) -> int:
    model, vocab = load_model_dir(args.ckpt, args.which)
    instances = load_instances(args.data)
    mode = ScoreMode(args.mode)
    if args.formulation == "ranking":
        report = eval_ranking(model, vocab, instances, mode).to_dict()
    else:
        if not args.dev_path:
            raise ConfigError(f"--dev is required for --formulation {args.formulation}")
        dev = load_instances(args.dev_path)
        if args.formulation == "classification":
            report = eval_classification(model, vocab, dev, instances, mode).to_dict()
        else:
            report = formulation_comparison(model, vocab, dev, instances, mode)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    _log(args, f"wrote {args.formulation} report to {args.out}")
    return 0


def _cmd_ensemble(args) -> int:
    pred_dir = Path(args.pred_dir) / "predictions"
    if not pred_dir.is_dir():
        raise DataError(f"{pred_dir} does not exist (expected a run directory)")
    files = sorted(pred_dir.glob("epoch_*.jsonl"))
    if not files:
        raise DataError(f"no prediction files in {pred_dir}")
    history = [read_prediction_file(f) for f in files]
    records = ensemble_vote(history, window=args.window)
    with open(args.out, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    _log(args, f"voted over the last {min(args.window, len(history))} of "
               f"{len(history)} epochs into {args.out}")
    return 0


def _gradcheck_fixture(run_cfg: RunConfig):
    sentence = "the lion chased the rabbit because it was fluffy."
    start = sentence.index(" it ") + 1
    inst = Instance(
        id="gradcheck-0",
        sentence=sentence,
        pronoun=Pronoun("it", start, start + 2),
        candidates=[Candidate("the rabbit", "positive"), Candidate("the lion", "negative")],
        source="synthetic",
    )
    inst.validate()
    from hybridref.data.tokenizer import Vocab

    vocab = Vocab.from_texts([sentence, "the rabbit", "the lion"])
    enc = run_cfg.encoder
    if enc == EncoderConfig():
        enc = EncoderConfig(d_model=8, num_layers=1, num_heads=1,
                            ffn_multiplier=2, max_positions=32)
    model = HybridModel.init(replace(enc, vocab_size=len(vocab)), seed=run_cfg.seed)
    return model, vocab, inst, run_cfg.training.effective_loss()


def _cmd_gradcheck(args) -> int:
    run_cfg = _load_run_config(args)
    model, vocab, inst, loss_cfg = _gradcheck_fixture(run_cfg)
    mode = score_mode_for(loss_cfg)

    def loss_fn():
        pos = score_candidate(model, vocab, inst, 0, mode)
        neg = score_candidate(model, vocab, inst, 1, mode)
        return loss_total(
            loss_cfg,
            p_mlm_pos=pos.p_mlm, p_mlm_neg=neg.p_mlm,
            p_ssm_pos=pos.p_ssm, p_ssm_neg=neg.p_ssm,
            score_pos=pos.combined, score_neg=neg.combined,
        ).total_tensor

    report = finite_difference_check(loss_fn, model.parameters(),
                                     h=args.step, rel_tol=args.rel_tol)
    print(report.summary(), file=sys.stderr)
    for name, index, analytic, fd, rel in report.failures:
        print(f"  {name}[{index}]: analytic={analytic:.6e} fd={fd:.6e} rel={rel:.3e}",
              file=sys.stderr)
    return 0 if report.ok else 1


_COMMANDS = {
    "synth": _cmd_synth,
    "convert": _cmd_convert,
    "train": _cmd_train,
    "score": _cmd_score,
    "eval": _cmd_eval,
    "ensemble": _cmd_ensemble,
    "gradcheck": _cmd_gradcheck,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 1
    except HybridrefError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
