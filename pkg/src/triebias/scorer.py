"""Model contract for next-token and K-step future-token log-probabilities.

Concrete models here are test doubles and replay readers; none run neural
inference. Future vectors are conditioned on the same prefix as the
next-token vector, i.e. they come out of the same decoder pass.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Protocol, Sequence, Tuple, Union

import numpy as np

NORM_TOL = 1e-6


class ScenarioError(ValueError):
    pass


class MissingPrefixError(KeyError):
    def __init__(self, prefix: Sequence[int]):
        super().__init__(f"no scores for prefix {list(prefix)}")
        self.prefix = tuple(prefix)


def _frozen(vec) -> np.ndarray:
    a = np.array(vec, dtype=np.float64)
    a.flags.writeable = False
    return a


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max()
    return z - np.log(np.exp(z).sum())


@dataclass(frozen=True)
class StepScores:
    next: np.ndarray
    future: Tuple[np.ndarray, ...] = ()

    @classmethod
    def of(cls, next, future=()) -> "StepScores":
        return cls(_frozen(next), tuple(_frozen(f) for f in future))

    def check(self, vocab_size: int, k: int, where: str = "") -> None:
        if len(self.future) != k - 1:
            raise ScenarioError(f"{where}expected {k - 1} future vectors, got {len(self.future)}")
        for vec in (self.next, *self.future):
            if vec.shape != (vocab_size,):
                raise ScenarioError(f"{where}vector has shape {vec.shape}, expected ({vocab_size},)")
            if np.isnan(vec).any() or np.isposinf(vec).any():
                raise ScenarioError(f"{where}non-finite log-probability")
            lse = np.logaddexp.reduce(vec)
            if abs(lse) > NORM_TOL:
                raise ScenarioError(f"{where}log-probs are not normalized (logsumexp={lse:.3g})")


class Scorer(Protocol):
    vocab_size: int
    k: int

    def score(self, prefix: Sequence[int]) -> StepScores: ...


def topk(scores: np.ndarray, mu: int) -> List[int]:
    """Ids of the ``mu`` highest scores, descending; ties go to the lower id."""
    scores = np.asarray(scores)
    if not 1 <= mu <= scores.shape[0]:
        raise ValueError(f"mu={mu} outside 1..{scores.shape[0]}")
    order = np.lexsort((np.arange(scores.shape[0]), -scores))
    return order[:mu].tolist()


def uniform_scores(vocab_size: int, k: int) -> StepScores:
    u = np.full(vocab_size, -math.log(vocab_size))
    return StepScores.of(u, [u] * (k - 1))


class ScenarioModel:
    """Table-driven model keyed on exact token-id prefixes.

    Lookup order: exact prefix entry, then the positional table (indexed by
    ``len(prefix) - 1``, last row reused past the end), then the fallback.
    The positional table stands in for a model whose output depends only on
    the audio position, which keeps synthetic corpora finite on disk.
    """

    def __init__(
        self,
        vocab_size: int,
        k: int,
        table: Optional[Dict[Tuple[int, ...], StepScores]] = None,
        positional: Sequence[StepScores] = (),
        fallback: str = "error",
    ):
        if fallback not in ("error", "uniform"):
            raise ScenarioError(f"unknown fallback {fallback!r}")
        if k < 1:
            raise ScenarioError("K must be >= 1")
        self.vocab_size = vocab_size
        self.k = k
        self.table = dict(table or {})
        self.positional = tuple(positional)
        self.fallback = fallback
        for prefix, s in self.table.items():
            s.check(vocab_size, k, where=f"prefix {list(prefix)}: ")
        for i, s in enumerate(self.positional):
            s.check(vocab_size, k, where=f"position {i}: ")
        self._uniform = uniform_scores(vocab_size, k)

    def score(self, prefix: Sequence[int]) -> StepScores:
        key = tuple(prefix)
        hit = self.table.get(key)
        if hit is not None:
            return hit
        if self.positional:
            return self.positional[min(len(key) - 1, len(self.positional) - 1)]
        if self.fallback == "uniform":
            return self._uniform
        raise MissingPrefixError(key)

    def to_dict(self) -> dict:
        d = {
            "vocab_size": self.vocab_size,
            "K": self.k,
            "entries": [
                {"prefix": list(p), "next": s.next.tolist(), "future": [f.tolist() for f in s.future]}
                for p, s in self.table.items()
            ],
            "fallback": self.fallback,
        }
        if self.positional:
            d["positional"] = [
                {"next": s.next.tolist(), "future": [f.tolist() for f in s.future]} for s in self.positional
            ]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioModel":
        try:
            vocab_size, k = int(d["vocab_size"]), int(d["K"])
            table = {}
            for e in d.get("entries", []):
                key = tuple(int(t) for t in e["prefix"])
                if key in table:
                    raise ScenarioError(f"duplicate entry for prefix {list(key)}")
                table[key] = StepScores.of(e["next"], e.get("future", []))
            positional = [StepScores.of(e["next"], e.get("future", [])) for e in d.get("positional", [])]
        except (KeyError, TypeError) as e:
            raise ScenarioError(f"malformed scenario: {e}") from e
        return cls(vocab_size, k, table, positional, d.get("fallback", "error"))


def load_scenario(path: Union[str, Path]) -> ScenarioModel:
    """Read one scenario JSON file (also the recorded-logits replay format)."""
    with open(path, encoding="utf-8") as f:
        return ScenarioModel.from_dict(json.load(f))


def save_scenario(model: ScenarioModel, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(model.to_dict()), encoding="utf-8")


def load_scenario_set(path: Union[str, Path]) -> Dict[str, ScenarioModel]:
    """JSON Lines, one scenario per line with an extra ``"id"`` key."""
    models = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            d = json.loads(line)
            try:
                models[str(d["id"])] = ScenarioModel.from_dict(d)
            except (ScenarioError, KeyError) as e:
                raise ScenarioError(f"{path}:{lineno}: {e}") from e
    return models


def save_scenario_set(models: Dict[str, ScenarioModel], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for uid, m in models.items():
            f.write(json.dumps({"id": uid, **m.to_dict()}) + "\n")


class RandomModel:
    """Seeded pseudo-random model for fuzzing.

    Scores are a pure function of ``(seed, prefix)``: each prefix hashes to
    its own generator, so query order never matters.
    """

    def __init__(self, vocab_size: int, k: int = 2, seed: int = 0, temperature: float = 1.5,
                 eos_id: Optional[int] = None, eos_boost: float = 0.0):
        self.vocab_size = vocab_size
        self.k = k
        self.seed = seed
        self.temperature = temperature
        self.eos_id = eos_id
        self.eos_boost = eos_boost
        self._cache: Dict[Tuple[int, ...], StepScores] = {}

    def _rng(self, prefix: Tuple[int, ...]) -> np.random.Generator:
        h = hashlib.blake2b(repr((self.seed, prefix)).encode(), digest_size=8).digest()
        return np.random.default_rng(int.from_bytes(h, "little"))

    def score(self, prefix: Sequence[int]) -> StepScores:
        key = tuple(int(t) for t in prefix)
        hit = self._cache.get(key)
        if hit is None:
            rng = self._rng(key)
            vecs = []
            for step in range(self.k):
                logits = rng.normal(scale=self.temperature, size=self.vocab_size)
                if self.eos_id is not None:
                    logits[self.eos_id] += self.eos_boost * (len(key) + step)
                vecs.append(log_softmax(logits))
            hit = StepScores.of(vecs[0], vecs[1:])
            self._cache[key] = hit
        return hit


def scenario_from_probs(vocab_size: int, k: int, rows: Iterable[Tuple[Sequence[int], dict, Sequence[dict]]],
                        floor: float = 1e-3, fallback: str = "error") -> ScenarioModel:
    """Build a table from sparse ``{token: prob}`` rows.

    Unlisted tokens share whatever mass is left (at least ``floor`` each
    before renormalization), which keeps every vector a proper distribution.
    """
    def dense(probs: dict) -> np.ndarray:
        p = np.zeros(vocab_size)
        for tok, val in probs.items():
            p[tok] = val
        rest = [i for i in range(vocab_size) if i not in probs]
        if rest:
            p[rest] = max((1.0 - p.sum()) / len(rest), floor)
        return np.log(p / p.sum())

    table = {}
    for prefix, nxt, future in rows:
        table[tuple(prefix)] = StepScores.of(dense(nxt), [dense(f) for f in future])
    return ScenarioModel(vocab_size, k, table, fallback=fallback)
