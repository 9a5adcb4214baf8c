"""Offline tokenizer construction.

Two builders: a WordPiece tokenizer with the [CLS] a [SEP] b [SEP] pair
template for the encoder, and a word-level tokenizer with offsets for the
causal perplexity model. Both train on plain text and save standard
tokenizer JSON, so nothing is fetched from a hub.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Union

from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors, trainers
from transformers import PreTrainedTokenizerFast

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]


def _wrap(tokenizer: Tokenizer, max_length: int) -> PreTrainedTokenizerFast:
    return PreTrainedTokenizerFast(
        tokenizer_object=tokenizer,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
        model_max_length=max_length,
    )


def train_wordpiece(
    texts: Iterable[str], vocab_size: int = 8000, max_length: int = 128
) -> PreTrainedTokenizerFast:
    """WordPiece tokenizer with the sentence-pair template, trained offline."""
    tok = Tokenizer(models.WordPiece(unk_token="[UNK]"))
    tok.normalizer = normalizers.Sequence(
        [normalizers.NFD(), normalizers.Lowercase(), normalizers.StripAccents()]
    )
    tok.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    trainer = trainers.WordPieceTrainer(
        vocab_size=vocab_size, min_frequency=1, special_tokens=SPECIALS
    )
    tok.train_from_iterator(texts, trainer)
    cls_id = tok.token_to_id("[CLS]")
    sep_id = tok.token_to_id("[SEP]")
    tok.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B:1 [SEP]:1",
        special_tokens=[("[CLS]", cls_id), ("[SEP]", sep_id)],
    )
    return _wrap(tok, max_length)


def train_word_level(
    texts: Iterable[str], vocab_size: int = 8000, max_length: int = 512
) -> PreTrainedTokenizerFast:
    """Word-level tokenizer for the causal model; keeps character offsets."""
    tok = Tokenizer(models.WordLevel(unk_token="[UNK]"))
    tok.normalizer = normalizers.Lowercase()
    tok.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    trainer = trainers.WordLevelTrainer(
        vocab_size=vocab_size, min_frequency=1, special_tokens=SPECIALS
    )
    tok.train_from_iterator(texts, trainer)
    return _wrap(tok, max_length)


def save_tokenizer(tokenizer: PreTrainedTokenizerFast, path: Union[str, Path]) -> None:
    tokenizer.save_pretrained(str(path))


def load_tokenizer(path: Union[str, Path]) -> PreTrainedTokenizerFast:
    from transformers import AutoTokenizer

    return AutoTokenizer.from_pretrained(str(path))
