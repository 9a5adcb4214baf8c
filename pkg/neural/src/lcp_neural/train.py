"""Fine-tuning loop: sentence-pair regression with mean squared error."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import torch
from torch.utils.data import DataLoader, Dataset

from .data import Row
from .model import NeuralConfig, freeze_lower_layers, load_regressor, set_seed

logger = logging.getLogger(__name__)


class PairDataset(Dataset):
    """(sentence, target expression) pairs with float labels."""

    def __init__(self, rows: list[Row], tokenizer, max_length: int):
        self.rows = rows
        self.tokenizer = tokenizer
        self.max_length = max_length

    def __len__(self) -> int:
        return len(self.rows)

    def __getitem__(self, idx: int):
        row = self.rows[idx]
        return {
            "sentence": row.sentence,
            "target": row.target,
            "label": 0.0 if row.complexity is None else float(row.complexity),
        }

    def collate(self, batch):
        enc = self.tokenizer(
            [b["sentence"] for b in batch],
            [b["target"] for b in batch],
            padding=True,
            truncation=True,
            max_length=self.max_length,
            return_tensors="pt",
        )
        enc["labels"] = torch.tensor([b["label"] for b in batch], dtype=torch.float)
        return enc


@dataclass
class TrainResult:
    model: object
    tokenizer: object
    epoch_losses: list[float]


def mean_mse(model, loader) -> float:
    model.eval()
    total, n = 0.0, 0
    with torch.no_grad():
        for batch in loader:
            out = model(**batch)
            size = batch["labels"].shape[0]
            total += float(out.loss) * size
            n += size
    return total / max(n, 1)


def train_neural(rows: list[Row], config: NeuralConfig) -> TrainResult:
    """Fine-tune the encoder + scalar head; returns per-epoch training MSE."""
    if not rows:
        raise ValueError("no training rows")
    if any(r.complexity is None for r in rows):
        raise ValueError("all training rows must be labeled")
    set_seed(config.seed)
    model, tokenizer = load_regressor(config.model_id)
    if config.freeze_up_to_layer is not None:
        frozen = freeze_lower_layers(model, config.freeze_up_to_layer)
        logger.info("froze %d parameter tensors below layer %d", frozen, config.freeze_up_to_layer)

    dataset = PairDataset(rows, tokenizer, config.max_length)
    generator = torch.Generator().manual_seed(config.seed)
    loader = DataLoader(
        dataset,
        batch_size=config.batch_size,
        shuffle=True,
        generator=generator,
        collate_fn=dataset.collate,
    )
    optimizer = torch.optim.AdamW(
        [p for p in model.parameters() if p.requires_grad], lr=config.learning_rate
    )
    epoch_losses = []
    for epoch in range(config.epochs):
        model.train()
        total, n = 0.0, 0
        for batch in loader:
            optimizer.zero_grad()
            out = model(**batch)
            out.loss.backward()
            optimizer.step()
            size = batch["labels"].shape[0]
            total += float(out.loss.detach()) * size
            n += size
        epoch_losses.append(total / n)
        logger.info("epoch %d/%d: training MSE %.6f", epoch + 1, config.epochs, epoch_losses[-1])
    return TrainResult(model, tokenizer, epoch_losses)
