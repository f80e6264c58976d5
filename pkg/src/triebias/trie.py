"""Prefix trie over tokenized bias words."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from .vocab import UntokenizableError, Vocabulary, tokenize

ROOT = 0


@dataclass
class TrieNode:
    parent: int
    edge: Optional[int]  # token on the edge from parent; None for the root
    children: Dict[int, int] = field(default_factory=dict)
    terminal_word: Optional[int] = None


@dataclass(frozen=True)
class TrieCursor:
    node: int
    depth: int


class BiasTrie:
    """Trie whose edges are token ids; node 0 is the root.

    A node may be both terminal and internal, e.g. when ``"Bon"`` and
    ``"Bonham"`` are both biased. Words with identical tokenizations share a
    terminal and keep the index of the first one added.
    """

    def __init__(self, words: Sequence[str] = (), paths: Sequence[Sequence[int]] = ()):
        self.nodes: List[TrieNode] = [TrieNode(parent=-1, edge=None)]
        self.words: List[str] = list(words)
        for idx, path in enumerate(paths):
            self._insert(path, idx)

    def _insert(self, path: Sequence[int], word_index: int) -> None:
        if not path:
            raise ValueError(f"bias word #{word_index} tokenizes to an empty path")
        node = ROOT
        for tok in path:
            nxt = self.nodes[node].children.get(tok)
            if nxt is None:
                nxt = len(self.nodes)
                self.nodes.append(TrieNode(parent=node, edge=tok))
                self.nodes[node].children[tok] = nxt
            node = nxt
        if self.nodes[node].terminal_word is None:
            self.nodes[node].terminal_word = word_index

    @property
    def num_terminals(self) -> int:
        return sum(n.terminal_word is not None for n in self.nodes)

    def is_empty(self) -> bool:
        return len(self.nodes) == 1

    def root_tokens(self) -> FrozenSet[int]:
        return frozenset(self.nodes[ROOT].children)

    def path_of(self, node: int) -> List[int]:
        path = []
        while node != ROOT:
            path.append(self.nodes[node].edge)
            node = self.nodes[node].parent
        return path[::-1]

    def dump_csv(self, path: Union[str, Path]) -> None:
        """Debug dump: one row per node."""
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["node_id", "parent_id", "edge_token", "terminal_word"])
            for i, n in enumerate(self.nodes):
                w.writerow([
                    i,
                    "" if n.parent < 0 else n.parent,
                    "" if n.edge is None else n.edge,
                    "" if n.terminal_word is None else self.words[n.terminal_word],
                ])


def build_trie(v: Vocabulary, bias_words: Iterable[str], prefix_space: bool = False) -> BiasTrie:
    """Tokenize each word and insert it.

    With ``prefix_space`` a leading space is prepended before tokenizing, for
    vocabularies whose word-initial units carry the boundary marker.
    """
    words = list(bias_words)
    paths = []
    for w in words:
        try:
            paths.append(tokenize(v, " " + w if prefix_space else w))
        except UntokenizableError as e:
            raise UntokenizableError(w, e.offset) from e
    return BiasTrie(words, paths)


def load_bias_words(path: Union[str, Path]) -> List[str]:
    with open(path, encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip()]


def advance(t: BiasTrie, c: Optional[TrieCursor], token: int) -> Optional[TrieCursor]:
    """Follow one edge; ``c=None`` means the root."""
    node, depth = (ROOT, 0) if c is None else (c.node, c.depth)
    child = t.nodes[node].children.get(token)
    if child is None:
        return None
    return TrieCursor(child, depth + 1)


def is_terminal(t: BiasTrie, c: TrieCursor) -> Optional[int]:
    return t.nodes[c.node].terminal_word


def continuations(t: BiasTrie, c: Optional[TrieCursor]) -> FrozenSet[int]:
    node = ROOT if c is None else c.node
    return frozenset(t.nodes[node].children)


def indicator_bruteforce(t: BiasTrie, y: Sequence[int]) -> bool:
    """True iff some suffix of ``y`` is a root path of the trie.

    Walks every suffix from the root independently; reference oracle for the
    incremental traversal bookkeeping used during decoding.
    """
    for start in range(len(y)):
        node = ROOT
        for tok in y[start:]:
            node = t.nodes[node].children.get(tok)
            if node is None:
                break
        else:
            return True
    return False


def occurrences(t: BiasTrie, y: Sequence[int]) -> List[Tuple[int, int, int]]:
    """All ``(start, end, word_index)`` spans of ``y`` that spell a complete bias word (end inclusive)."""
    found = []
    for start in range(len(y)):
        node = ROOT
        for end in range(start, len(y)):
            node = t.nodes[node].children.get(y[end])
            if node is None:
                break
            if t.nodes[node].terminal_word is not None:
                found.append((start, end, t.nodes[node].terminal_word))
    return found
