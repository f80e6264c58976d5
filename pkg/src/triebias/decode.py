"""Greedy and beam search with trie-based biasing.

Scoring rule: a candidate token earns ``lam`` when it extends at least one
trie traversal (a match may start at any position). Under ``kstep`` the
reward additionally requires the K-step lookahead to confirm the match.
Under ``naive_with_revocation`` a reward is taken back once no live
traversal covers the rewarded token any more.

Reward bookkeeping is per token position: a token is rewarded at most once,
its bonus commits as soon as any traversal covering it completes a word, and
it is revoked when no live traversal covers it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .scorer import Scorer, StepScores, topk
from .trie import ROOT, BiasTrie, TrieCursor, advance, is_terminal

MODES = ("none", "naive", "naive_with_revocation", "kstep")
TRACE_COLUMNS = ("step", "candidate", "base_lp", "reward", "gate_result", "revoked")


class ConfigError(ValueError):
    pass


class ModelError(RuntimeError):
    pass


@dataclass(frozen=True)
class BiasConfig:
    lam: float = 3.0
    mu: int = 10
    k: int = 2
    mode: str = "kstep"
    beam_size: int = 1
    max_len: int = 64

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.lam < 0:
            raise ConfigError("lam must be non-negative")
        if self.mu < 1:
            raise ConfigError("mu must be positive")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.mode == "kstep" and self.k < 2:
            raise ConfigError("kstep mode needs k >= 2")
        if self.beam_size < 1:
            raise ConfigError("beam_size must be positive")
        if self.max_len < 1:
            raise ConfigError("max_len must be positive")

    @property
    def revocation(self) -> bool:
        return self.mode == "naive_with_revocation"


@dataclass(frozen=True)
class Traversal:
    cursor: TrieCursor
    start: int  # index into Hypothesis.tokens of the first matched token
    pending_bonus: float = 0.0

    def span(self) -> range:
        return range(self.start, self.start + self.cursor.depth)


@dataclass(frozen=True)
class Hypothesis:
    tokens: Tuple[int, ...]
    base_lp: float = 0.0
    biased_score: float = 0.0
    traversals: Tuple[Traversal, ...] = ()
    finished: bool = False
    revoked_total: float = 0.0
    rewarded: Tuple[int, ...] = ()
    pending: FrozenSet[int] = frozenset()
    completed: Tuple[Tuple[int, int], ...] = ()

    def sort_key(self):
        return (-self.biased_score, self.tokens)


@dataclass
class DecodeResult:
    tokens: List[int]  # emitted tokens, BOS excluded, EOS kept if emitted
    base_lp: float
    biased_score: float
    scorer_calls: int
    completed_bias_words: List[Tuple[int, int]]  # (word index, emitted-token position)
    hypothesis: Hypothesis = field(repr=False)
    finalists: List[Hypothesis] = field(default_factory=list, repr=False)


def successors(t: BiasTrie, traversals: Sequence[Traversal], cand: int, position: int) -> Tuple[Traversal, ...]:
    """Traversals after consuming ``cand`` at ``position``, plus a fresh one from the root."""
    out = []
    for tr in traversals:
        c = advance(t, tr.cursor, cand)
        if c is not None:
            out.append(Traversal(c, tr.start))
    c = advance(t, None, cand)
    if c is not None:
        out.append(Traversal(c, position))
    return tuple(out)


def _gate(t: BiasTrie, node: int, tops: Sequence[Set[int]], j: int) -> bool:
    if t.nodes[node].terminal_word is not None:
        return True
    if j == len(tops):
        return True
    kids = t.nodes[node].children
    return any(_gate(t, kids[tok], tops, j + 1) for tok in tops[j] if tok in kids)


class _Tops:
    """Lazily computed top-mu sets of each future vector for one step."""

    def __init__(self, s: StepScores, mu: int):
        self._s = s
        self._mu = mu
        self._sets: Dict[int, Set[int]] = {}

    def __len__(self):
        return len(self._s.future)

    def __getitem__(self, j: int) -> Set[int]:
        if j not in self._sets:
            self._sets[j] = set(topk(self._s.future[j], self._mu))
        return self._sets[j]


def _reward(t, h, cand, s, cfg, tops=None):
    if cfg.mode == "none":
        return 0.0, (), None
    succ = successors(t, h.traversals, cand, len(h.tokens))
    if not succ:
        return 0.0, (), None
    if cfg.mode == "kstep":
        if not s.future:
            raise ConfigError("kstep mode needs future-token scores from the model")
        if tops is None:
            tops = _Tops(s, cfg.mu)
        ok = any(_gate(t, tr.cursor.node, tops, 0) for tr in succ)
        return (cfg.lam if ok else 0.0), succ, ok
    return cfg.lam, succ, None


def step_reward(t: BiasTrie, h: Hypothesis, cand: int, s: StepScores, cfg: BiasConfig):
    """Reward for appending ``cand`` to ``h`` and the resulting traversal set."""
    reward, succ, _ = _reward(t, h, cand, s, cfg)
    return reward, succ


def revoke(h: Hypothesis, dead: Sequence[Traversal], lam: float) -> Hypothesis:
    """Take back pending bonuses of dead traversals not covered by a surviving one."""
    covered = set()
    for tr in h.traversals:
        covered.update(tr.span())
    lost = set()
    for tr in dead:
        lost.update(p for p in tr.span() if p in h.pending and p not in covered)
    if not lost:
        return h
    amount = lam * len(lost)
    return replace(
        h,
        biased_score=h.biased_score - amount,
        revoked_total=h.revoked_total + amount,
        pending=h.pending - lost,
        traversals=_with_pending(h.traversals, h.pending - lost, lam),
    )


def _with_pending(traversals, pending, lam):
    return tuple(replace(tr, pending_bonus=lam * sum(p in pending for p in tr.span())) for tr in traversals)


def extend(t: BiasTrie, h: Hypothesis, cand: int, lp: float, reward: float,
           succ: Sequence[Traversal], cfg: BiasConfig, eos_id: int) -> Hypothesis:
    n = len(h.tokens)
    pending = set(h.pending)
    rewarded = h.rewarded
    if reward > 0:
        pending.add(n)
        rewarded = rewarded + (n,)
    completed = h.completed
    for tr in succ:
        w = is_terminal(t, tr.cursor)
        if w is not None:
            completed = completed + ((w, n),)
            pending.difference_update(tr.span())
    pending = frozenset(pending)
    new = Hypothesis(
        tokens=h.tokens + (cand,),
        base_lp=h.base_lp + lp,
        biased_score=h.biased_score + lp + reward,
        traversals=_with_pending(succ, pending, cfg.lam),
        finished=cand == eos_id,
        revoked_total=h.revoked_total,
        rewarded=rewarded,
        pending=pending,
        completed=completed,
    )
    if cfg.revocation:
        alive = {tr.start for tr in succ}
        new = revoke(new, [tr for tr in h.traversals if tr.start not in alive], cfg.lam)
    return new


def close(h: Hypothesis, cfg: BiasConfig) -> Hypothesis:
    """Drop all traversals of a hypothesis cut off at max_len (revoking when enabled)."""
    if cfg.revocation:
        h = revoke(replace(h, traversals=()), h.traversals, cfg.lam)
    return replace(h, traversals=())


def _scores(model: Scorer, prefix, cfg: BiasConfig) -> StepScores:
    s = model.score(prefix)
    if not np.all(np.isfinite(s.next)):
        raise ModelError(f"non-finite next-token scores for prefix {list(prefix)}")
    if cfg.mode == "kstep" and model.k != cfg.k:
        raise ConfigError(f"model K={model.k} does not match decode k={cfg.k}")
    return s


def _biased_vector(t, h, s, cfg, trace_rows=None, step=0):
    """Per-token biased scores for one hypothesis, and the reward details of trie candidates."""
    biased = np.array(s.next, dtype=np.float64)
    details = {}
    if cfg.mode != "none":
        cands = set(t.nodes[ROOT].children)
        for tr in h.traversals:
            cands.update(t.nodes[tr.cursor.node].children)
        tops = _Tops(s, cfg.mu) if cfg.mode == "kstep" else None
        for c in sorted(cands):
            r, succ, gate = _reward(t, h, c, s, cfg, tops)
            details[c] = (r, succ, gate)
            biased[c] += r
    return biased, details


def _trace(rows, step, cand, lp, reward, gate, revoked):
    if rows is not None:
        rows.append({
            "step": step, "candidate": cand, "base_lp": lp, "reward": reward,
            "gate_result": "" if gate is None else ("pass" if gate else "fail"),
            "revoked": revoked,
        })


def _result(best: Hypothesis, calls: int, finalists=()) -> DecodeResult:
    return DecodeResult(
        tokens=list(best.tokens[1:]),
        base_lp=best.base_lp,
        biased_score=best.biased_score,
        scorer_calls=calls,
        completed_bias_words=[(w, p - 1) for w, p in best.completed],
        hypothesis=best,
        finalists=list(finalists),
    )


def greedy_decode(model: Scorer, t: BiasTrie, cfg: BiasConfig, bos_id: int, eos_id: int,
                  trace: Optional[list] = None) -> DecodeResult:
    if cfg.beam_size != 1:
        raise ConfigError("greedy decoding needs beam_size == 1")
    h = Hypothesis(tokens=(bos_id,))
    calls = 0
    for step in range(cfg.max_len):
        s = _scores(model, h.tokens, cfg)
        calls += 1
        biased, details = _biased_vector(t, h, s, cfg)
        cand = int(np.argmax(biased))
        reward, succ, gate = details.get(cand, (0.0, (), None))
        lp = float(s.next[cand])
        before = h.revoked_total
        h = extend(t, h, cand, lp, reward, succ, cfg, eos_id)
        if trace is not None:
            for c, (r, _, g) in details.items():
                if c != cand:
                    _trace(trace, step, c, float(s.next[c]), r, g, 0.0)
            _trace(trace, step, cand, lp, reward, gate, h.revoked_total - before)
        if h.finished:
            break
    else:
        h = close(h, cfg)
    return _result(h, calls, [h])


def beam_decode(model: Scorer, t: BiasTrie, cfg: BiasConfig, bos_id: int, eos_id: int,
                trace: Optional[list] = None) -> DecodeResult:
    """Beam search over biased scores.

    Each live hypothesis is expanded with its top-J tokens by biased step
    score (rewards are applied before the cut); the top J of the pooled
    candidates and already-finished hypotheses survive. Search stops once
    every beam entry ends in EOS or ``max_len`` tokens have been emitted.
    """
    J = cfg.beam_size
    beam = [Hypothesis(tokens=(bos_id,))]
    calls = 0
    for step in range(cfg.max_len):
        pool = [h for h in beam if h.finished]
        for h in beam:
            if h.finished:
                continue
            s = _scores(model, h.tokens, cfg)
            calls += 1
            biased, details = _biased_vector(t, h, s, cfg)
            for cand in topk(biased, min(J, biased.shape[0])):
                reward, succ, gate = details.get(cand, (0.0, (), None))
                lp = float(s.next[cand])
                new = extend(t, h, cand, lp, reward, succ, cfg, eos_id)
                _trace(trace, step, cand, lp, reward, gate, new.revoked_total - h.revoked_total)
                pool.append(new)
        pool.sort(key=Hypothesis.sort_key)
        beam = pool[:J]
        if all(h.finished for h in beam):
            break
    beam = [h if h.finished else close(h, cfg) for h in beam]
    beam.sort(key=Hypothesis.sort_key)
    return _result(beam[0], calls, beam)


def decode(model: Scorer, t: BiasTrie, cfg: BiasConfig, bos_id: int, eos_id: int,
           trace: Optional[list] = None) -> DecodeResult:
    if cfg.beam_size == 1:
        return greedy_decode(model, t, cfg, bos_id, eos_id, trace)
    return beam_decode(model, t, cfg, bos_id, eos_id, trace)


def cost_delta(results: Sequence[DecodeResult], baseline: Union[DecodeResult, Sequence[DecodeResult]]) -> float:
    """Relative increase in scorer calls over the baseline run(s)."""
    base = [baseline] if isinstance(baseline, DecodeResult) else list(baseline)
    denom = sum(r.scorer_calls for r in base)
    if denom <= 0:
        raise ZeroDivisionError("baseline made no scorer calls")
    return sum(r.scorer_calls for r in results) / denom - 1.0


def write_trace(rows: Sequence[dict], path: Union[str, Path], extra: Sequence[str] = ()) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=[*extra, *TRACE_COLUMNS])
        w.writeheader()
        w.writerows(rows)
