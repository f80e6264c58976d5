"""WER with biased/unbiased error attribution.

Substitutions and deletions go to the biased bucket when the reference word
is in the utterance's bias list; insertions go there only when the inserted
hypothesis word is. Everything else is unbiased. Rates are corpus-level.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from typing import Collection, Dict, List, Optional, Sequence, Tuple

MATCH, SUB, INS, DEL = "match", "substitute", "insert", "delete"

_PUNCT = string.punctuation + "“”‘’«»…"


def normalize_text(s: str) -> List[str]:
    words = (w.strip(_PUNCT) for w in s.lower().split())
    return [w for w in words if w]


@dataclass(frozen=True)
class EditOp:
    op: str
    ref: Optional[str]
    hyp: Optional[str]


def align(ref: Sequence[str], hyp: Sequence[str]) -> List[EditOp]:
    """Minimum-edit-distance word alignment with unit costs.

    Backtrace prefers match, then substitution, deletion, insertion.
    """
    R, H = len(ref), len(hyp)
    d = [[0] * (H + 1) for _ in range(R + 1)]
    for i in range(R + 1):
        d[i][0] = i
    for j in range(H + 1):
        d[0][j] = j
    for i in range(1, R + 1):
        for j in range(1, H + 1):
            diag = d[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1])
            d[i][j] = min(diag, d[i - 1][j] + 1, d[i][j - 1] + 1)
    ops = []
    i, j = R, H
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and d[i][j] == d[i - 1][j - 1]:
            ops.append(EditOp(MATCH, ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and d[i][j] == d[i - 1][j - 1] + 1:
            ops.append(EditOp(SUB, ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and d[i][j] == d[i - 1][j] + 1:
            ops.append(EditOp(DEL, ref[i - 1], None))
            i -= 1
        else:
            ops.append(EditOp(INS, None, hyp[j - 1]))
            j -= 1
    return ops[::-1]


def edit_cost(ops: Sequence[EditOp]) -> int:
    return sum(o.op != MATCH for o in ops)


@dataclass
class Counts:
    sub: int = 0
    ins: int = 0
    dele: int = 0
    ref_words: int = 0

    @property
    def errors(self) -> int:
        return self.sub + self.ins + self.dele

    @property
    def rate(self) -> Optional[float]:
        return self.errors / self.ref_words if self.ref_words else None

    def add(self, other: "Counts") -> None:
        self.sub += other.sub
        self.ins += other.ins
        self.dele += other.dele
        self.ref_words += other.ref_words

    def to_dict(self) -> dict:
        return {"sub": self.sub, "ins": self.ins, "del": self.dele, "ref_words": self.ref_words,
                "errors": self.errors, "rate": self.rate}


@dataclass
class EvalReport:
    wer: Counts = field(default_factory=Counts)
    bwer: Counts = field(default_factory=Counts)
    uwer: Counts = field(default_factory=Counts)

    def to_dict(self) -> dict:
        return {"wer": self.wer.to_dict(), "bwer": self.bwer.to_dict(), "uwer": self.uwer.to_dict()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def tsv_header(self) -> str:
        return "\t".join(f"{b}_{k}" for b in ("wer", "bwer", "uwer") for k in ("rate", "errors", "ref_words"))

    def to_tsv(self) -> str:
        cells = []
        for c in (self.wer, self.bwer, self.uwer):
            cells += ["null" if c.rate is None else f"{c.rate:.6f}", str(c.errors), str(c.ref_words)]
        return "\t".join(cells)


def _utterance_counts(ref, hyp, bias: Collection[str]) -> Tuple[Counts, Counts]:
    b, u = Counts(), Counts()
    for w in ref:
        (b if w in bias else u).ref_words += 1
    for o in align(ref, hyp):
        if o.op == SUB:
            (b if o.ref in bias else u).sub += 1
        elif o.op == DEL:
            (b if o.ref in bias else u).dele += 1
        elif o.op == INS:
            (b if o.hyp in bias else u).ins += 1
    return b, u


def evaluate(refs: Sequence[Sequence[str]], hyps: Sequence[Sequence[str]],
             bias_lists: Sequence[Collection[str]]) -> EvalReport:
    """Aggregate WER / B-WER / U-WER over utterances.

    ``refs`` and ``hyps`` are normalized word lists; bias words are
    normalized here before membership tests.
    """
    if not (len(refs) == len(hyps) == len(bias_lists)):
        raise ValueError(
            f"utterance counts differ: {len(refs)} refs, {len(hyps)} hyps, {len(bias_lists)} bias lists"
        )
    report = EvalReport()
    for ref, hyp, bias in zip(refs, hyps, bias_lists):
        bias = {" ".join(normalize_text(w)) for w in bias}
        b, u = _utterance_counts(list(ref), list(hyp), bias)
        report.bwer.add(b)
        report.uwer.add(u)
        report.wer.add(b)
        report.wer.add(u)
    return report


def join_by_id(hyps: Dict[str, str], refs: Dict[str, str], bias: Dict[str, Sequence[str]]):
    """Inner-join three id-keyed maps; raise listing every id missing somewhere."""
    ids = sorted(set(hyps) | set(refs) | set(bias))
    missing = [i for i in ids if i not in hyps or i not in refs or i not in bias]
    if missing:
        raise KeyError(f"ids missing from hyps, refs or bias lists: {missing}")
    return ids
