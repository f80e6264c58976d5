"""Subword vocabulary: file loading, longest-match tokenization, detokenization."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

# Word-boundary marker; a space in the input maps to it.
WORD_BOUNDARY = "▁"


class VocabFormatError(ValueError):
    pass


class UntokenizableError(ValueError):
    def __init__(self, word: str, offset: int):
        super().__init__(f"cannot tokenize {word!r}: no vocabulary entry matches at offset {offset}")
        self.word = word
        self.offset = offset


@dataclass(frozen=True)
class Vocabulary:
    surfaces: Tuple[str, ...]
    bos_id: int
    eos_id: int
    _index: Dict[str, int] = field(init=False, repr=False, compare=False)
    _max_len: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.surfaces)) != len(self.surfaces):
            raise VocabFormatError("duplicate surfaces")
        if any(not s for s in self.surfaces):
            raise VocabFormatError("empty surface")
        size = len(self.surfaces)
        for name, tid in (("bos", self.bos_id), ("eos", self.eos_id)):
            if not 0 <= tid < size:
                raise VocabFormatError(f"{name} id {tid} out of range for V={size}")
        if self.bos_id == self.eos_id:
            raise VocabFormatError("bos and eos must differ")
        # BOS/EOS never take part in matching
        index = {s: i for i, s in enumerate(self.surfaces) if i not in (self.bos_id, self.eos_id)}
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_max_len", max((len(s) for s in index), default=0))

    @classmethod
    def from_units(cls, units: Sequence[str], bos: str = "<s>", eos: str = "</s>") -> "Vocabulary":
        """BOS and EOS take ids 0 and 1; units follow in order."""
        return cls((bos, eos, *units), bos_id=0, eos_id=1)

    @property
    def size(self) -> int:
        return len(self.surfaces)

    def __len__(self) -> int:
        return len(self.surfaces)

    def id_of(self, surface: str) -> int:
        return self._index[surface]

    def save(self, path: Union[str, Path]) -> None:
        lines = [f"#bos {self.bos_id}", f"#eos {self.eos_id}"]
        lines += [f"{i}\t{s}" for i, s in enumerate(self.surfaces)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocab(path: Union[str, Path]) -> Vocabulary:
    """Read a ``<id>\\t<surface>`` file with ``#bos``/``#eos`` header lines."""
    bos = eos = None
    by_id: Dict[int, str] = {}
    seen: Dict[str, int] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] in ("bos", "eos"):
                    try:
                        value = int(parts[1])
                    except ValueError:
                        raise VocabFormatError(f"{path}:{lineno}: bad {parts[0]} id {parts[1]!r}")
                    if parts[0] == "bos":
                        bos = value
                    else:
                        eos = value
                continue
            tid_text, sep, surface = line.partition("\t")
            if not sep:
                raise VocabFormatError(f"{path}:{lineno}: expected '<id>\\t<surface>'")
            try:
                tid = int(tid_text)
            except ValueError:
                raise VocabFormatError(f"{path}:{lineno}: bad token id {tid_text!r}")
            if tid < 0:
                raise VocabFormatError(f"{path}:{lineno}: negative token id {tid}")
            if not surface:
                raise VocabFormatError(f"{path}:{lineno}: empty surface")
            if tid in by_id:
                raise VocabFormatError(f"{path}:{lineno}: duplicate id {tid}")
            if surface in seen:
                raise VocabFormatError(
                    f"{path}:{lineno}: duplicate surface {surface!r} (first on line {seen[surface]})"
                )
            by_id[tid] = surface
            seen[surface] = lineno
    if bos is None or eos is None:
        raise VocabFormatError(f"{path}: missing '#bos' or '#eos' declaration")
    if sorted(by_id) != list(range(len(by_id))):
        raise VocabFormatError(f"{path}: token ids are not dense 0..{len(by_id) - 1}")
    return Vocabulary(tuple(by_id[i] for i in range(len(by_id))), bos_id=bos, eos_id=eos)


def tokenize(v: Vocabulary, word: str) -> List[int]:
    """Greedy longest-match segmentation, left to right.

    Spaces are rewritten to the word-boundary marker before matching, so
    ``" Bonham"`` matches a ``"▁Bon"`` entry.
    """
    if not word:
        raise ValueError("cannot tokenize an empty string")
    text = word.replace(" ", WORD_BOUNDARY)
    ids = []
    pos = 0
    while pos < len(text):
        for end in range(min(len(text), pos + v._max_len), pos, -1):
            tid = v._index.get(text[pos:end])
            if tid is not None:
                ids.append(tid)
                pos = end
                break
        else:
            raise UntokenizableError(word, pos)
    return ids


def detokenize(v: Vocabulary, seq: Sequence[int]) -> str:
    """Concatenate surfaces, skipping BOS/EOS; the boundary marker becomes a space."""
    parts = []
    for tid in seq:
        if not 0 <= tid < v.size:
            raise IndexError(f"token id {tid} out of range for V={v.size}")
        if tid in (v.bos_id, v.eos_id):
            continue
        parts.append(v.surfaces[tid])
    return "".join(parts).replace(WORD_BOUNDARY, " ")
