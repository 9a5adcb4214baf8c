"""Command line for the neural complexity regressor.

    lcp-neural create-tiny --train data.tsv --out model_dir
    lcp-neural train --train data.tsv --model model_dir --out run_dir
    lcp-neural export --data data.tsv --model run_dir/model --out run_dir
    lcp-neural perplexity --data data.tsv --lm lm_dir --out ppl.tsv

All inputs and outputs use the pipeline's exchange formats (dataset TSV in;
predictions TSV, attention dump JSON, feature-column TSV out).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .data import load_rows
from .model import NeuralConfig, create_tiny_encoder, load_regressor, set_seed
from .export import predict_and_export
from .perplexity import export_perplexity
from .train import train_neural

logger = logging.getLogger("lcp_neural")


def cmd_create_tiny(args) -> int:
    rows = load_rows(args.train)
    texts = [r.sentence for r in rows]
    out = create_tiny_encoder(
        texts,
        args.out,
        vocab_size=args.vocab_size,
        hidden_size=args.hidden_size,
        num_layers=args.layers,
        num_heads=args.heads,
        seed=args.seed,
    )
    logger.info("tiny encoder written to %s", out)
    return 0


def cmd_train(args) -> int:
    rows = load_rows(args.train)
    model_id = args.model
    if model_id is None:
        model_id = str(Path(args.out) / "base")
        create_tiny_encoder([r.sentence for r in rows], model_id, seed=args.seed)
        logger.info("no --model given; built a tiny encoder at %s", model_id)
    config = NeuralConfig(
        model_id=model_id,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        seed=args.seed,
        freeze_up_to_layer=args.freeze_up_to_layer,
    )
    result = train_neural(rows, config)
    out = Path(args.out)
    model_dir = out / "model"
    result.model.save_pretrained(model_dir)
    result.tokenizer.save_pretrained(str(model_dir))
    (out / "training_loss.tsv").write_text(
        "epoch\tmse\n"
        + "".join(f"{i + 1}\t{v!r}\n" for i, v in enumerate(result.epoch_losses)),
        encoding="utf-8",
    )
    logger.info(
        "trained %d epochs (MSE %.6f -> %.6f); model at %s",
        config.epochs, result.epoch_losses[0], result.epoch_losses[-1], model_dir,
    )
    return 0


def cmd_export(args) -> int:
    rows = load_rows(args.data)
    set_seed(args.seed)
    model, tokenizer = load_regressor(args.model)
    paths = predict_and_export(model, tokenizer, rows, args.out)
    logger.info("wrote %s and %s", paths["predictions"], paths["attention_dump"])
    return 0


def cmd_perplexity(args) -> int:
    rows = load_rows(args.data)
    from transformers import AutoModelForCausalLM, AutoTokenizer

    model = AutoModelForCausalLM.from_pretrained(args.lm)
    tokenizer = AutoTokenizer.from_pretrained(args.lm)
    path = export_perplexity(rows, model, tokenizer, args.out, window=args.window)
    logger.info("wrote %s", path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lcp-neural", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("create-tiny", help="build a small local pretrained encoder")
    p.add_argument("--train", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--vocab-size", type=int, default=2000)
    p.add_argument("--hidden-size", type=int, default=64)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_create_tiny)

    p = sub.add_parser("train", help="fine-tune on labeled data")
    p.add_argument("--train", required=True)
    p.add_argument("--model", default=None, help="pretrained model dir or hub id")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--learning-rate", type=float, default=5e-4)
    p.add_argument("--freeze-up-to-layer", type=int, default=None)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("export", help="predictions TSV + attention dump JSON")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("perplexity", help="ppl / ppl_aspect_only feature columns")
    p.add_argument("--data", required=True)
    p.add_argument("--lm", required=True, help="causal LM dir or hub id")
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int, default=256)
    p.set_defaults(func=cmd_perplexity)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
