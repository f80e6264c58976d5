"""Authored scenarios and synthetic corpora for tests and experiments."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from .scorer import RandomModel, ScenarioModel, StepScores, log_softmax, scenario_from_probs
from .trie import BiasTrie
from .vocab import Vocabulary, tokenize

# -- Bonham / Bulan ---------------------------------------------------------

BONHAM_UNITS = ("Bon", "Bu", "ham", "lan")
BONHAM_WORDS = ("Bonham", "Bulan")
BONHAM_MU = 2  # V=6, so the default mu=10 is out of range


def bonham_vocab() -> Vocabulary:
    return Vocabulary.from_units(BONHAM_UNITS)


def bonham_model() -> ScenarioModel:
    """Audio says "Bulan"; the model slightly prefers [Bon] at the first step.

    Over whole sequences "Bulan" is still the likelier one (0.4 * 0.9 versus
    0.5 * 0.6 for "Bonlan"), but greedy search commits to [Bon] first.

    The two-step head, reading the same decoder state, puts [lan] first and
    [ham] outside its top-2 for position 2.
    """
    BOS, EOS, BON, BU, HAM, LAN = range(6)
    end = {EOS: 0.97, BOS: 0.006, BON: 0.006, BU: 0.006, HAM: 0.006, LAN: 0.006}
    after = {EOS: 0.9, BOS: 0.02, BON: 0.02, BU: 0.02, HAM: 0.02, LAN: 0.02}
    rows = [
        ((BOS,), {BON: 0.5, BU: 0.4, HAM: 0.03, LAN: 0.03, EOS: 0.02, BOS: 0.02},
         [{LAN: 0.7, EOS: 0.2, HAM: 0.02, BU: 0.02, BON: 0.02, BOS: 0.04}]),
        ((BOS, BON), {LAN: 0.6, EOS: 0.3, HAM: 0.02, BOS: 0.03, BON: 0.025, BU: 0.025}, [after]),
        ((BOS, BU), {LAN: 0.9, HAM: 0.02, EOS: 0.04, BOS: 0.01, BON: 0.015, BU: 0.015}, [after]),
    ]
    for first, second in itertools.product((BON, BU), (HAM, LAN)):
        rows.append(((BOS, first, second), end, [end]))
    exact = scenario_from_probs(6, 2, rows)
    # unlisted prefixes: ask for EOS once two units have been emitted
    positional = [exact.table[(BOS,)], exact.table[(BOS, BON)], exact.table[(BOS, BON, LAN)]]
    return ScenarioModel(6, 2, exact.table, positional=positional)


# -- confusable word families -------------------------------------------------

_ONSETS = "b d f g k l m n p r s t v z".split()
_VOWELS = "a e i o u".split()
_CODAS = "n m r l k".split()
_CONT_ONSETS = "h d l t w y j ch sh th".split()
_CONT_VOWELS = "am an el or is ux ep ov".split()
COMMON = (
    "go to the road street please take me near at drive walk turn left right "
    "and then find way stop here lane avenue bus from where is how far"
).split()


@dataclass
class ConfusableCorpus:
    vocab: Vocabulary
    models: Dict[str, ScenarioModel]
    refs: Dict[str, str]
    train_refs: Dict[str, str]
    common: Tuple[str, ...]
    families: List[Tuple[str, List[str]]]  # (first subword, member words)
    confused: Dict[str, bool] = field(default_factory=dict)

    def write(self, out_dir, seed: int = 0, n_values=(10, 50, 100), modes=("naive", "kstep"),
              beam_sizes=(1,)) -> Path:
        """Write every input file plus a sweep config; returns the config path."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.vocab.save(out / "vocab.txt")
        with open(out / "scenarios.jsonl", "w", encoding="utf-8") as f:
            for uid, m in self.models.items():
                f.write(json.dumps({"id": uid, **m.to_dict()}) + "\n")
        for name, refs in (("refs.jsonl", self.refs), ("train_refs.jsonl", self.train_refs)):
            with open(out / name, "w", encoding="utf-8") as f:
                for uid, text in refs.items():
                    f.write(json.dumps({"id": uid, "ref": text}) + "\n")
        (out / "common.txt").write_text("\n".join(self.common) + "\n", encoding="utf-8")
        config = {
            "vocab": "vocab.txt",
            "scenarios": "scenarios.jsonl",
            "references": "refs.jsonl",
            "train_references": "train_refs.jsonl",
            "common_words": "common.txt",
            "prefix_space": True,
            "seed": seed,
            "decode": {"lam": 3.0, "mu": 10, "k": 2, "mode": "kstep", "beam_size": 1, "max_len": 16},
            "n": 100,
            "sweep": {"n": list(n_values), "modes": list(modes), "beam_sizes": list(beam_sizes)},
        }
        path = out / "config.json"
        path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
        return path


def _syllables(rng: np.random.Generator) -> List[str]:
    firsts = [o + v + c for o in _ONSETS for v in _VOWELS for c in _CODAS]
    firsts = [s for s in firsts if s not in COMMON]
    return [firsts[i] for i in rng.permutation(len(firsts))]


def make_confusable_corpus(n_pairs: int = 60, members: int = 3, n_utts: int = 200, seed: int = 0,
                           p_confuse: float = 0.5, future_mass: float = 0.6) -> ConfusableCorpus:
    """Families of rare words share a first subword; families come in pairs
    whose first subwords the simulated model confuses.

    Each utterance contains one rare word. With probability ``p_confuse`` the
    model scores the paired family's first subword above the true one (0.5
    vs 0.4), otherwise the true one wins (0.6 vs 0.3). Continuations and
    the surrounding common words are recognized correctly. The two-step head
    gives ``future_mass`` to the true next token and spreads the rest at
    random, so unrelated tokens fill the remaining top-mu slots.
    """
    rng = np.random.default_rng(seed)
    firsts = _syllables(rng)[: 2 * n_pairs]
    conts = [o + v for o in _CONT_ONSETS for v in _CONT_VOWELS]
    if len(firsts) < 2 * n_pairs or len(conts) < 2 * members:
        raise ValueError("not enough syllables for the requested corpus size")

    families = []
    for p in range(n_pairs):
        picked = [conts[i] for i in rng.choice(len(conts), size=2 * members, replace=False)]
        for side in range(2):
            first = firsts[2 * p + side]
            families.append((first, [first + c for c in picked[side * members:(side + 1) * members]]))

    units = sorted({"▁" + w for w in COMMON} | {"▁" + f for f, _ in families} | set(conts))
    vocab = Vocabulary.from_units(units)
    for first, words in families:
        for w in words:
            expect = [vocab.id_of("▁" + first), vocab.id_of(w[len(first):])]
            if tokenize(vocab, " " + w) != expect:
                raise ValueError(f"tokenization clash for {w!r}")

    V = vocab.size
    eos = vocab.eos_id
    models, refs, confused = {}, {}, {}
    for u in range(n_utts):
        uid = f"utt{u:04d}"
        fam = int(rng.integers(len(families)))
        first, words = families[fam]
        word = words[int(rng.integers(len(words)))]
        partner = families[fam ^ 1][0]
        left = [COMMON[i] for i in rng.choice(len(COMMON), size=2, replace=False)]
        right = COMMON[int(rng.integers(len(COMMON)))]
        text = " ".join([*left, word, right])
        ref_ids = tokenize(vocab, " " + text) + [eos]
        rare_pos = 2
        is_confused = bool(rng.random() < p_confuse)

        rows = []
        for n, tok in enumerate(ref_ids + [eos]):
            p = np.zeros(V)
            if n == rare_pos:
                wrong = vocab.id_of("▁" + partner)
                p[wrong], p[tok] = (0.5, 0.4) if is_confused else (0.3, 0.6)
            else:
                p[tok] = 0.9 if tok != eos or n < len(ref_ids) else 0.99
            rest = p == 0
            p[rest] = (1.0 - p.sum()) / rest.sum()
            nxt = np.log(p)

            target = ref_ids[n + 1] if n + 1 < len(ref_ids) else eos
            noise = rng.dirichlet(np.full(V - 1, 0.3)) * (1.0 - future_mass)
            f = np.insert(noise, target, 0.0)
            f[target] = future_mass
            fut = log_softmax(np.log(np.maximum(f, 1e-12)))
            rows.append(StepScores.of(nxt - np.logaddexp.reduce(nxt), [fut]))
        models[uid] = ScenarioModel(V, 2, positional=rows)
        refs[uid] = text
        confused[uid] = is_confused

    train_refs = {}
    for i, w in enumerate(w for _, ws in families for w in ws):
        left = COMMON[i % len(COMMON)]
        train_refs[f"train{i:04d}"] = f"{left} to {w}"
    return ConfusableCorpus(vocab, models, refs, train_refs, tuple(COMMON), families, confused)


# -- fixed-length and random instances ---------------------------------------

def fixed_length_model(vocab_size: int, length: int, seed: int = 0, k: int = 2,
                       eos_id: int = 1, peak: float = 0.7) -> ScenarioModel:
    """Position-only model that emits EOS at ``length`` and (almost) never before."""
    rng = np.random.default_rng(seed)
    rows = []
    for n in range(length + 1):
        vecs = []
        for j in range(k):
            pos = n + j
            p = rng.dirichlet(np.ones(vocab_size))
            if pos >= length - 1:
                p = np.full(vocab_size, 0.03 / (vocab_size - 1))
                p[eos_id] = 0.97
            else:
                p[eos_id] = 0.0
                top = int(rng.integers(vocab_size))
                while top == eos_id:
                    top = int(rng.integers(vocab_size))
                p[top] = 0.0
                p = p / p.sum() * (1.0 - peak - 1e-6)
                p[top] = peak
                p[eos_id] = 1e-6
            vecs.append(np.log(p))
        rows.append(StepScores.of(vecs[0], vecs[1:]))
    return ScenarioModel(vocab_size, k, positional=rows)


@dataclass
class RandomInstance:
    model: RandomModel
    trie: BiasTrie
    vocab_size: int
    bos_id: int = 0
    eos_id: int = 1


def random_instance(seed: int, vocab_size: int = 7, max_words: int = 8, max_word_len: int = 3,
                    eos_boost: float = 0.4) -> RandomInstance:
    """Random model plus a random trie over the non-special tokens (ids >= 2)."""
    rng = np.random.default_rng(seed)
    n_words = int(rng.integers(0, max_words + 1))
    paths = []
    for _ in range(n_words):
        length = int(rng.integers(1, max_word_len + 1))
        paths.append([int(t) for t in rng.integers(2, vocab_size, size=length)])
    trie = BiasTrie([f"w{i}" for i in range(n_words)], paths)
    model = RandomModel(vocab_size, k=2, seed=seed, eos_id=1, eos_boost=eos_boost)
    return RandomInstance(model, trie, vocab_size)
