from pathlib import Path

import pytest
import torch

PRIMARY_DATA = Path(__file__).resolve().parents[2] / "tests" / "data"


@pytest.fixture(scope="session")
def train_rows():
    from lcp_neural.data import load_rows

    return load_rows(PRIMARY_DATA / "complex_train_200.tsv")


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory, train_rows):
    from lcp_neural.model import create_tiny_encoder

    out = tmp_path_factory.mktemp("pretrained") / "tiny"
    create_tiny_encoder(
        [r.sentence for r in train_rows], out,
        vocab_size=600, hidden_size=32, num_layers=2, num_heads=2, seed=0,
    )
    return out


@pytest.fixture(scope="session")
def word_lm(train_rows):
    """Tiny causal LM over a word-level vocabulary; weights untouched."""
    from lcp_neural.tokenization import train_word_level
    from transformers import GPT2Config, GPT2LMHeadModel

    tokenizer = train_word_level([r.sentence for r in train_rows], vocab_size=600)
    torch.manual_seed(0)
    config = GPT2Config(
        vocab_size=tokenizer.vocab_size, n_embd=32, n_layer=1, n_head=2,
        n_positions=128, bos_token_id=None, eos_token_id=None,
    )
    return GPT2LMHeadModel(config), tokenizer


@pytest.fixture()
def uniform_lm(word_lm):
    """The same LM with all weights zeroed: exactly uniform next-token law."""
    from transformers import GPT2LMHeadModel

    model, tokenizer = word_lm
    clone = GPT2LMHeadModel(model.config)
    with torch.no_grad():
        for p in clone.parameters():
            p.zero_()
    return clone, tokenizer
