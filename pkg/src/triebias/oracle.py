"""Brute-force reference computations used to cross-check the fast paths."""

from __future__ import annotations

import math
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from .decode import BiasConfig, Hypothesis, beam_decode, greedy_decode, successors
from .metrics import align, edit_cost
from .scorer import RandomModel, Scorer
from .synth import random_instance
from .trie import BiasTrie, indicator_bruteforce, occurrences


def best_sequence(model: Scorer, bos: int, eos: int, max_len: int) -> Tuple[float, Tuple[int, ...]]:
    """Exhaustive argmax of summed log-probs.

    Candidates are sequences that end in EOS within ``max_len`` tokens or
    reach ``max_len`` tokens without EOS. Ties go to the lexicographically
    smaller sequence.
    """
    best = (-math.inf, ())

    def walk(prefix: Tuple[int, ...], lp: float):
        nonlocal best
        scores = model.score(prefix).next
        for tok in range(scores.shape[0]):
            total = lp + float(scores[tok])
            seq = prefix + (tok,)
            if tok == eos or len(seq) - 1 == max_len:
                if total > best[0] or (total == best[0] and seq[1:] < best[1]):
                    best = (total, seq[1:])
            else:
                walk(seq, total)

    walk((bos,), 0.0)
    return best


def committed_bonus(t: BiasTrie, tokens: Sequence[int], lam: float) -> float:
    """Bonus a revocation-enabled decode must keep for ``tokens`` (BOS excluded).

    Every token inside some complete bias-word occurrence keeps exactly one
    reward; all others keep none.
    """
    covered = set()
    for start, end, _ in occurrences(t, tokens):
        covered.update(range(start, end + 1))
    return lam * len(covered)


def min_edit_cost(ref: Sequence[str], hyp: Sequence[str]) -> int:
    """Minimum alignment cost by plain recursion over all edit scripts."""
    if not ref:
        return len(hyp)
    if not hyp:
        return len(ref)
    return min(
        min_edit_cost(ref[1:], hyp[1:]) + (ref[0] != hyp[0]),
        min_edit_cost(ref[1:], hyp) + 1,
        min_edit_cost(ref, hyp[1:]) + 1,
    )


def traversal_nonempty(t: BiasTrie, y: Sequence[int]) -> bool:
    trs = ()
    for pos, tok in enumerate(y):
        trs = successors(t, trs, tok, pos)
    return bool(trs)


# -- suites -----------------------------------------------------------------

def check_exhaustive_beam(seed: int, cases: int) -> Tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for case in range(cases):
        V = int(rng.integers(3, 6))
        max_len = int(rng.integers(1, 7))
        model = RandomModel(V, k=2, seed=int(rng.integers(2 ** 32)))
        cfg = BiasConfig(mode="none", beam_size=V ** max_len, max_len=max_len)
        res = beam_decode(model, BiasTrie(), cfg, bos_id=0, eos_id=1)
        lp, _ = best_sequence(model, 0, 1, max_len)
        worst = max(worst, abs(res.base_lp - lp))
        if abs(res.base_lp - lp) > 1e-9:
            return False, f"case {case}: beam {res.base_lp!r} vs brute force {lp!r}"
    return True, f"{cases} cases, max |diff| = {worst:.2e}"


def check_indicator(seed: int, cases: int) -> Tuple[bool, str]:
    rng = np.random.default_rng(seed)
    for case in range(cases):
        inst = random_instance(int(rng.integers(2 ** 32)), vocab_size=12, max_words=8)
        for _ in range(20):
            y = [int(x) for x in rng.integers(0, 12, size=int(rng.integers(0, 11)))]
            if indicator_bruteforce(inst.trie, y) != traversal_nonempty(inst.trie, y):
                return False, f"case {case}: disagreement on {y}"
    return True, f"{cases} tries x 20 sequences"


def check_alignment(seed: int = 0, cases: int = 0) -> Tuple[bool, str]:
    import itertools

    alphabet = "abc"
    n = 0
    for lr in range(5):
        for lh in range(5):
            for ref in itertools.product(alphabet, repeat=lr):
                for hyp in itertools.product(alphabet, repeat=lh):
                    n += 1
                    if edit_cost(align(ref, hyp)) != min_edit_cost(ref, hyp):
                        return False, f"{ref} vs {hyp}"
    return True, f"{n} pairs"


def revocation_violations(inst, cfg: BiasConfig) -> List[str]:
    if cfg.beam_size == 1:
        res = greedy_decode(inst.model, inst.trie, cfg, inst.bos_id, inst.eos_id)
    else:
        res = beam_decode(inst.model, inst.trie, cfg, inst.bos_id, inst.eos_id)
    bad = []
    for h in res.finalists:
        expect = committed_bonus(inst.trie, h.tokens[1:], cfg.lam)
        got = h.biased_score - h.base_lp
        if abs(got - expect) > 1e-9:
            bad.append(f"tokens={h.tokens} bonus={got} expected={expect}")
        if not h.completed and abs(got) > 1e-9:
            bad.append(f"tokens={h.tokens} keeps {got} without a completed word")
    return bad


def check_revocation(seed: int, cases: int) -> Tuple[bool, str]:
    rng = np.random.default_rng(seed)
    for case in range(cases):
        inst = random_instance(int(rng.integers(2 ** 32)))
        for J in (1, 2, 3):
            cfg = BiasConfig(mode="naive_with_revocation", lam=float(rng.choice([1.0, 3.0])), beam_size=J, max_len=8)
            bad = revocation_violations(inst, cfg)
            if bad:
                return False, f"case {case}, J={J}: {bad[0]}"
    return True, f"{cases} instances x J in (1, 2, 3)"


def run_all(seed: int = 0, cases: int = 200) -> Iterator[Tuple[str, bool, str]]:
    for name, fn in (
        ("exhaustive-beam", check_exhaustive_beam),
        ("indicator-vs-traversal", check_indicator),
        ("alignment-optimality", check_alignment),
        ("revocation-accounting", check_revocation),
    ):
        passed, detail = fn(seed, cases)
        yield name, passed, detail
