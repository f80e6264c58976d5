"""One test per acceptance criterion; each records a PASS/FAIL line for the terminal summary."""

import json
import time

import numpy as np
import pytest

from triebias.cli import ExperimentConfig, main, run_sweep
from triebias.decode import MODES, BiasConfig, decode
from triebias.metrics import evaluate
from triebias.oracle import check_alignment, check_exhaustive_beam, check_revocation, min_edit_cost
from triebias.synth import (
    BONHAM_MU,
    BONHAM_WORDS,
    bonham_model,
    bonham_vocab,
    fixed_length_model,
    make_confusable_corpus,
    random_instance,
)
from triebias.trie import BiasTrie, build_trie
from triebias.vocab import detokenize


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("confusable")
    corpus = make_confusable_corpus(n_pairs=60, n_utts=200, seed=0)
    path = corpus.write(d, seed=0, n_values=(10, 50, 100), modes=("naive", "kstep"), beam_sizes=(1,))
    return corpus, path


def scenario_suite(corpus):
    """(name, model, trie, eos_id) over every authored and seeded scenario family."""
    v = bonham_vocab()
    yield "bonham", bonham_model(), build_trie(v, BONHAM_WORDS), v.eos_id
    for seed in range(50):
        inst = random_instance(seed)
        yield f"random{seed}", inst.model, inst.trie, inst.eos_id
    for seed in range(10):
        inst = random_instance(seed)
        yield f"fixed{seed}", fixed_length_model(inst.vocab_size, 5, seed), inst.trie, inst.eos_id
    members = {w: fam for _, fam in corpus.families for w in fam}
    for uid in list(corpus.models)[:40]:
        hit = [members[w] for w in corpus.refs[uid].split() if w in members]
        words = sorted({w for fam in hit for w in fam}) or corpus.families[0][1]
        yield uid, corpus.models[uid], build_trie(corpus.vocab, words, prefix_space=True), corpus.vocab.eos_id


def test_c1_exhaustive_beam(record_criterion):
    start = time.perf_counter()
    ok, detail = check_exhaustive_beam(seed=1, cases=200)
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 60
    record_criterion("1 exhaustive-beam oracle", ok, f"{detail}, {elapsed:.1f}s")
    assert ok, detail


def test_c2_zero_bias_equivalence(record_criterion, corpus_dir):
    corpus, _ = corpus_dir
    bad, n = [], 0
    for name, model, trie, eos in scenario_suite(corpus):
        k = model.k
        for J in (1, 2):
            base = dict(mu=2, k=k, beam_size=J, max_len=16)
            ref = decode(model, trie, BiasConfig(mode="none", **base), 0, eos).tokens
            outs = [decode(model, trie, BiasConfig(mode="naive", lam=0.0, **base), 0, eos).tokens]
            outs += [decode(model, BiasTrie(), BiasConfig(mode=m, **base), 0, eos).tokens for m in MODES]
            n += 1
            if any(o != ref for o in outs):
                bad.append(f"{name} J={J}")
    ok = not bad
    record_criterion("2 zero-bias / empty-trie equivalence", ok, f"{n} scenario x J runs, {len(bad)} mismatches")
    assert ok, bad[:5]


def test_c3_revocation_exactness(record_criterion):
    ok, detail = check_revocation(seed=3, cases=200)
    record_criterion("3 revocation exactness", ok, detail)
    assert ok, detail


def test_c4_bonham_bulan(record_criterion, bonham):
    v, model, trie = bonham
    bulan = [3, 5, 1]

    def run(mode, J):
        return decode(model, trie, BiasConfig(mode=mode, mu=BONHAM_MU, beam_size=J), v.bos_id, v.eos_id)

    naive = run("naive", 1)
    kstep = run("kstep", 1)
    beam = run("naive_with_revocation", 2)
    ok = naive.tokens != bulan and kstep.tokens == bulan and beam.tokens == bulan
    detail = " / ".join(f"{n}={detokenize(v, r.tokens)!r}"
                        for n, r in (("greedy naive", naive), ("greedy kstep", kstep), ("beam2 revoke", beam)))
    record_criterion("4 Bonham/Bulan example", ok, detail)
    assert ok, detail


@pytest.mark.slow
def test_c5_trend(record_criterion, corpus_dir):
    corpus, path = corpus_dir
    start = time.perf_counter()
    _, cells = run_sweep(ExperimentConfig.load(path))
    elapsed = time.perf_counter() - start
    bwer = {(c["mode"], c["N"]): c["report"]["bwer"]["rate"] for c in cells}
    gaps = [bwer["naive", n] - bwer["kstep", n] for n in (10, 50, 100)]
    ok = (len(corpus.families) >= 50
          and all(g >= 0 for g in gaps)
          and all(b >= a for a, b in zip(gaps, gaps[1:]))
          and gaps[-1] > 0
          and elapsed < 300)
    detail = ", ".join(f"N={n}: naive {bwer['naive', n]:.3f} kstep {bwer['kstep', n]:.3f}" for n in (10, 50, 100))
    record_criterion("5 B-WER trend on confusable corpus", ok,
                     f"{len(corpus.families)} families; {detail}; {elapsed:.1f}s")
    assert ok, detail


def test_c6_cost_accounting(record_criterion):
    rng = np.random.default_rng(6)
    bad, n = [], 0
    for seed in range(30):
        inst = random_instance(seed)
        length = int(rng.integers(2, 9))
        model = fixed_length_model(inst.vocab_size, length, seed)
        calls = {}
        for mode in ("naive", "kstep"):
            for J in (1, 2, 3, 4):
                cfg = BiasConfig(mode=mode, mu=3, beam_size=J, max_len=length + 4)
                calls[mode, J] = decode(model, inst.trie, cfg, 0, 1).scorer_calls
        n += 1
        for mode in ("naive", "kstep"):
            for J in (2, 3, 4):
                if abs(calls[mode, J] - J * calls[mode, 1]) > J:
                    bad.append(f"seed {seed} {mode} J={J}: {calls[mode, J]} vs {J}x{calls[mode, 1]}")
        if calls["kstep", 1] != calls["naive", 1]:
            bad.append(f"seed {seed}: kstep adds calls at J=1")
    ok = not bad
    record_criterion("6 cost accounting", ok, f"{n} fixed-length scenarios, J in 1..4, {len(bad)} violations")
    assert ok, bad[:5]


HAND_CASES = [
    # (ref, hyp, bias, expected B counts (sub, ins, del), expected U counts)
    ("go to bulan", "go to bonham", {"bulan", "bonham"}, (1, 0, 0), (0, 0, 0)),
    ("go home", "go bonham home", {"bonham"}, (0, 1, 0), (0, 0, 0)),
    ("go", "go home", {"bonham"}, (0, 0, 0), (0, 1, 0)),
    ("go bulan", "go", {"bulan"}, (0, 0, 1), (0, 0, 0)),
]


def test_c7_metrics(record_criterion):
    rng = np.random.default_rng(7)
    words = ["a", "b", "c", "bon", "bu"]
    for _ in range(500):
        n_utts = int(rng.integers(1, 6))
        refs = [list(rng.choice(words, size=int(rng.integers(0, 7)))) for _ in range(n_utts)]
        hyps = [list(rng.choice(words, size=int(rng.integers(0, 7)))) for _ in range(n_utts)]
        bias = [set(rng.choice(words, size=int(rng.integers(0, 4)), replace=False)) for _ in range(n_utts)]
        r = evaluate(refs, hyps, bias)
        if (r.wer.errors != r.bwer.errors + r.uwer.errors
                or r.wer.ref_words != r.bwer.ref_words + r.uwer.ref_words
                or r.wer.errors != sum(min_edit_cost(a, b) for a, b in zip(refs, hyps))):
            record_criterion("7 metrics correctness", False, f"decomposition fails on {refs} / {hyps}")
            pytest.fail("decomposition")
    align_ok, align_detail = check_alignment()
    hand_ok = True
    for ref, hyp, bias, b, u in HAND_CASES:
        r = evaluate([ref.split()], [hyp.split()], [bias])
        hand_ok &= (r.bwer.sub, r.bwer.ins, r.bwer.dele) == b and (r.uwer.sub, r.uwer.ins, r.uwer.dele) == u
    ok = align_ok and hand_ok
    record_criterion("7 metrics correctness", ok,
                     f"500 decomposition sets; alignment {align_detail}; {len(HAND_CASES)} hand cases")
    assert ok


def test_c8_determinism(record_criterion, corpus_dir, tmp_path):
    _, path = corpus_dir
    cfg = json.loads(path.read_text())
    cfg["sweep"] = {"n": [10, 50], "modes": ["naive", "kstep"], "beam_sizes": [1, 2]}
    small = path.parent / "determinism.json"
    small.write_text(json.dumps(cfg))
    codes = [main(["sweep", "--config", str(small), "--out", str(tmp_path / name)]) for name in ("a", "b")]
    a, b = (tmp_path / "a" / "sweep.csv").read_bytes(), (tmp_path / "b" / "sweep.csv").read_bytes()
    ok = codes == [0, 0] and a == b
    rows = len(a.splitlines()) - 1
    record_criterion("8 sweep determinism", ok, f"{rows} rows, byte-identical={a == b}")
    assert ok
