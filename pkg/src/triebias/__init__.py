"""Trie-based contextual biasing with K-step lookahead for autoregressive decoders."""

from .decode import (
    BiasConfig,
    DecodeResult,
    Hypothesis,
    Traversal,
    beam_decode,
    cost_delta,
    decode,
    greedy_decode,
    revoke,
    step_reward,
)
from .metrics import EvalReport, align, evaluate, normalize_text
from .scorer import ScenarioModel, StepScores, load_scenario, topk
from .trie import BiasTrie, TrieCursor, advance, build_trie, continuations, indicator_bruteforce, is_terminal
from .vocab import Vocabulary, detokenize, load_vocab, tokenize

__version__ = "0.1.0"
