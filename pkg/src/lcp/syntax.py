"""Constituency parse trees: bracketed-notation parsing, a parser-service
client with an on-disk cache, and the syntactic feature set."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import requests

from .corpus import MISSING

logger = logging.getLogger(__name__)

PENN_POS_TAGS = (
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD",
    "NN", "NNP", "NNPS", "NNS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR",
    "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP",
    "VBZ", "WDT", "WP", "WP$", "WRB",
)


class ParseError(ValueError):
    """Raised for malformed bracketed parse strings."""


@dataclass
class ParseTree:
    """Ordered labeled tree; leaves carry tokens, internal nodes categories."""

    label: str
    children: list["ParseTree"]
    token: Optional[str] = None

    @property
    def is_leaf(self) -> bool:
        return self.token is not None

    def leaves(self) -> list[str]:
        if self.is_leaf:
            return [self.token]
        out = []
        for child in self.children:
            out.extend(child.leaves())
        return out

    def serialize(self) -> str:
        if self.is_leaf:
            return self.token
        inner = " ".join(c.serialize() for c in self.children)
        return f"({self.label} {inner})"


def parse_bracketed(text: str) -> ParseTree:
    """Parse a Penn Treebank S-expression into a ParseTree.

    Whitespace-insensitive; unbalanced parentheses and empty nodes raise
    ParseError with a character position.
    """
    pos = 0
    n = len(text)

    def skip_ws() -> None:
        nonlocal pos
        while pos < n and text[pos].isspace():
            pos += 1

    def read_atom() -> str:
        nonlocal pos
        start = pos
        while pos < n and not text[pos].isspace() and text[pos] not in "()":
            pos += 1
        if pos == start:
            raise ParseError(f"expected a symbol at position {start}")
        return text[start:pos]

    def read_node() -> ParseTree:
        nonlocal pos
        skip_ws()
        if pos >= n or text[pos] != "(":
            raise ParseError(f"expected '(' at position {pos}")
        pos += 1
        skip_ws()
        label = read_atom()
        children: list[ParseTree] = []
        leaf_token: Optional[str] = None
        while True:
            skip_ws()
            if pos >= n:
                raise ParseError(f"unbalanced parentheses at position {pos}")
            if text[pos] == ")":
                pos += 1
                break
            if text[pos] == "(":
                children.append(read_node())
            else:
                tok = read_atom()
                if children or leaf_token is not None:
                    raise ParseError(
                        f"mixed tokens and subtrees under {label!r} at position {pos}"
                    )
                leaf_token = tok
        if leaf_token is not None:
            # preterminal: label node with a single leaf child
            return ParseTree(label, [ParseTree(leaf_token, [], token=leaf_token)])
        if not children:
            raise ParseError(f"empty node {label!r} at position {pos}")
        return ParseTree(label, children)

    tree = read_node()
    skip_ws()
    if pos != n:
        raise ParseError(f"trailing input at position {pos}")
    return tree


def sentence_key(sentence: str) -> str:
    """Cache key for a sentence: hex SHA-256 of its UTF-8 bytes."""
    return hashlib.sha256(sentence.encode("utf-8")).hexdigest()


class ParseCache:
    """On-disk "sentence-hash<TAB>bracketed-parse" store."""

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path else None
        self._entries: dict[str, str] = {}
        if self.path and self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.rstrip("\n")
                    if not line:
                        continue
                    key, _, bracket = line.partition("\t")
                    if bracket:
                        self._entries[key] = bracket

    def get(self, sentence: str) -> Optional[str]:
        return self._entries.get(sentence_key(sentence))

    def put(self, sentence: str, bracket: str) -> None:
        key = sentence_key(sentence)
        if key in self._entries:
            return
        self._entries[key] = bracket
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(f"{key}\t{bracket}\n")


@dataclass
class ParserClientConfig:
    endpoint: str = ""
    parse_field: str = "parse"
    timeout_s: float = 30.0
    cache_path: Optional[str] = None
    offline: bool = False


class ParserClient:
    """Fetches bracketed parses over HTTP POST, caching by sentence hash."""

    def __init__(self, config: ParserClientConfig, session: Optional[requests.Session] = None):
        self.config = config
        self.session = session or requests.Session()
        self.cache = ParseCache(config.cache_path)
        self.network_calls = 0

    def fetch_parse(self, sentence: str) -> Optional[ParseTree]:
        """Parse tree for the sentence, or None when unavailable."""
        bracket = self.cache.get(sentence)
        if bracket is None:
            if self.config.offline or not self.config.endpoint:
                logger.warning("no cached parse for sentence (offline); features missing")
                return None
            bracket = self._fetch_remote(sentence)
            if bracket is None:
                return None
            self.cache.put(sentence, bracket)
        try:
            return parse_bracketed(bracket)
        except ParseError as exc:
            logger.warning("cached parse is malformed (%s); features missing", exc)
            return None

    def _fetch_remote(self, sentence: str) -> Optional[str]:
        try:
            self.network_calls += 1
            resp = self.session.post(
                self.config.endpoint,
                data=sentence.encode("utf-8"),
                timeout=self.config.timeout_s,
            )
            resp.raise_for_status()
            return str(resp.json()[self.config.parse_field])
        except (requests.RequestException, KeyError, ValueError, TypeError) as exc:
            logger.warning("parser service failed: %s", exc)
            return None


def _leaf_paths(tree: ParseTree) -> list[tuple[str, int, str]]:
    """(token, depth in edges from root, preterminal label) per leaf, in order."""
    out: list[tuple[str, int, str]] = []

    def walk(node: ParseTree, depth: int, parent_label: str) -> None:
        if node.is_leaf:
            out.append((node.token, depth, parent_label))
            return
        for child in node.children:
            walk(child, depth + 1, node.label)

    walk(tree, 0, "")
    return out


def syntactic_features(tree: Optional[ParseTree], target: str) -> dict[str, float]:
    """Tree-derived features of the target's first matching leaf.

    parse_tree_depth is the maximum root-to-leaf edge count; token_depth the
    target leaf's; num_words_at_depth the number of leaves at token_depth.
    is_proper means capitalized and not sentence-initial. The POS one-hot
    comes from the target's preterminal; tags outside the Penn set leave all
    36 columns 0. A None tree (parse unavailable) yields the all-missing
    record.
    """
    leaves = _leaf_paths(tree) if tree is not None else []
    feats: dict[str, float] = {}
    idx = next((i for i, (tok, _, _) in enumerate(leaves) if tok == target), None)
    if idx is None:
        idx = next(
            (i for i, (tok, _, _) in enumerate(leaves) if tok.lower() == target.lower()),
            None,
        )
    if idx is None:
        feats["parse_tree_depth"] = MISSING
        feats["token_depth"] = MISSING
        feats["num_words_at_depth"] = MISSING
        feats["is_proper"] = MISSING
        for tag in PENN_POS_TAGS:
            feats[f"POS_{_tag_column(tag)}"] = 0.0
        return feats
    token, depth, tag = leaves[idx]
    feats["parse_tree_depth"] = float(max(d for _, d, _ in leaves))
    feats["token_depth"] = float(depth)
    feats["num_words_at_depth"] = float(sum(1 for _, d, _ in leaves if d == depth))
    feats["is_proper"] = float(idx > 0 and token[:1].isupper())
    for t in PENN_POS_TAGS:
        feats[f"POS_{_tag_column(t)}"] = float(t == tag)
    return feats


def _tag_column(tag: str) -> str:
    # '$' is awkward in downstream tooling; PRP$ -> PRP_DLR etc.
    return tag.replace("$", "_DLR")


def load_precomputed_parses(path: Union[str, Path]) -> ParseCache:
    """A precomputed parse file has exactly the cache's format."""
    return ParseCache(path)
