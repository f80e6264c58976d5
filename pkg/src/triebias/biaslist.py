"""Rare-word pools and per-utterance bias lists with seeded distractors."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Collection, Iterable, List, Sequence, Set, Union

import numpy as np

from .metrics import normalize_text

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RareWordPool:
    words: tuple
    source: str = "train"

    def __len__(self):
        return len(self.words)


@dataclass(frozen=True)
class UtteranceBiasList:
    id: str
    true_rare: tuple
    distractors: tuple
    seed: int

    @property
    def bias(self) -> List[str]:
        return [*self.true_rare, *self.distractors]

    def to_record(self) -> dict:
        return {"id": self.id, "bias": self.bias, "true_rare": list(self.true_rare),
                "n": len(self.distractors), "seed": self.seed}


def load_word_list(path: Union[str, Path]) -> Set[str]:
    """One word per line; normalized, blank lines skipped."""
    with open(path, encoding="utf-8") as f:
        return {w for line in f for w in normalize_text(line)}


def rare_words(words: Iterable[str], common: Collection[str]) -> List[str]:
    """Rare words of one transcript in first-occurrence order, deduplicated."""
    out = []
    for w in words:
        if w not in common and w not in out:
            out.append(w)
    return out


def extract_rare(transcripts: Iterable[Sequence[str]], common: Collection[str], source: str = "train") -> RareWordPool:
    if not common:
        raise ValueError("common-word list is empty")
    pool = {w for t in transcripts for w in t if w not in common}
    return RareWordPool(tuple(sorted(pool)), source)


def utterance_seed(global_seed: int, utt_id: str) -> int:
    h = hashlib.blake2b(f"{global_seed}\x00{utt_id}".encode(), digest_size=8).digest()
    return int.from_bytes(h, "little")


def distractor_order(pool: RareWordPool, exclude: Collection[str], seed: int) -> List[str]:
    """Seeded permutation of the pool minus ``exclude``.

    Taking the first N of this order gives nested lists across N.
    """
    cands = [w for w in pool.words if w not in exclude]
    rng = np.random.default_rng(seed)
    return [cands[i] for i in rng.permutation(len(cands))]


def make_bias_list(utt_id: str, utt_ref: Sequence[str], pool: RareWordPool, n: int,
                   global_seed: int, common: Collection[str]) -> UtteranceBiasList:
    if n < 0:
        raise ValueError("number of distractors must be non-negative")
    true_rare = rare_words(utt_ref, common)
    seed = utterance_seed(global_seed, utt_id)
    order = distractor_order(pool, set(true_rare), seed)
    if n > len(order):
        log.warning("utterance %s: only %d distractors available, asked for %d", utt_id, len(order), n)
    return UtteranceBiasList(utt_id, tuple(true_rare), tuple(order[:n]), seed)


def write_bias_lists(lists: Iterable[UtteranceBiasList], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for b in lists:
            f.write(json.dumps(b.to_record(), ensure_ascii=False) + "\n")


def read_bias_lists(path: Union[str, Path]) -> dict:
    """``{id: [bias words]}`` from a JSON Lines file."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                rec = json.loads(line)
                out[str(rec["id"])] = list(rec["bias"])
    return out
