"""Encoder construction and loading for the complexity regressor."""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import torch
from transformers import (
    AutoModelForSequenceClassification,
    BertConfig,
    BertForSequenceClassification,
)

from .tokenization import load_tokenizer, save_tokenizer, train_wordpiece


@dataclass
class NeuralConfig:
    """Fine-tuning settings; loss is mean squared error by construction."""

    model_id: str = ""
    epochs: int = 5
    batch_size: int = 16
    learning_rate: float = 5e-4
    max_length: int = 128
    seed: int = 7
    freeze_up_to_layer: Optional[int] = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def set_seed(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


def create_tiny_encoder(
    texts,
    out_dir: Union[str, Path],
    vocab_size: int = 2000,
    hidden_size: int = 64,
    num_layers: int = 2,
    num_heads: int = 2,
    max_length: int = 128,
    seed: int = 0,
) -> Path:
    """Build a small randomly initialized encoder + tokenizer directory.

    The directory then serves as a local "pretrained model identifier" for
    training at desk scale.
    """
    set_seed(seed)
    tokenizer = train_wordpiece(texts, vocab_size=vocab_size, max_length=max_length)
    config = BertConfig(
        vocab_size=tokenizer.vocab_size,
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=num_heads,
        intermediate_size=hidden_size * 4,
        max_position_embeddings=max_length + 2,
        num_labels=1,
        problem_type="regression",
        pad_token_id=tokenizer.pad_token_id,
    )
    model = BertForSequenceClassification(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    save_tokenizer(tokenizer, out_dir)
    return out_dir


def load_regressor(model_id: str):
    """Resolve a local directory (or hub id) to (model, tokenizer).

    The model is forced to a 1-output regression head with eager attention
    so attention maps are exportable.
    """
    path = Path(model_id)
    if not path.exists() and "/" not in model_id:
        raise ValueError(f"model id {model_id!r} is not a local path and looks unresolvable")
    try:
        model = AutoModelForSequenceClassification.from_pretrained(
            model_id,
            num_labels=1,
            problem_type="regression",
            attn_implementation="eager",
        )
        tokenizer = load_tokenizer(model_id)
    except Exception as exc:
        raise ValueError(f"could not resolve pretrained model {model_id!r}: {exc}") from exc
    return model, tokenizer


def freeze_lower_layers(model, up_to_layer: int) -> int:
    """Freeze embeddings and encoder layers below ``up_to_layer``.

    Returns the number of frozen parameter tensors. Layers at or above the
    index, plus the regression head, stay trainable.
    """
    frozen = 0
    base = getattr(model, model.base_model_prefix)
    for p in base.embeddings.parameters():
        p.requires_grad = False
        frozen += 1
    for idx, layer in enumerate(base.encoder.layer):
        if idx < up_to_layer:
            for p in layer.parameters():
                p.requires_grad = False
                frozen += 1
    return frozen
