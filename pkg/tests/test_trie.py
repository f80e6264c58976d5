import csv
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from triebias.oracle import traversal_nonempty
from triebias.synth import random_instance
from triebias.trie import (
    BiasTrie,
    TrieCursor,
    advance,
    build_trie,
    continuations,
    indicator_bruteforce,
    is_terminal,
    occurrences,
)
from triebias.vocab import UntokenizableError, Vocabulary

BOS, EOS, BON, BU, HAM, LAN = range(6)


@pytest.fixture
def toy():
    return Vocabulary.from_units(["Bon", "Bu", "ham", "lan"])


def test_bonham_trie_shape(toy):
    t = build_trie(toy, ["Bonham", "Bulan"])
    assert continuations(t, None) == {BON, BU}
    bon = advance(t, None, BON)
    bonham = advance(t, bon, HAM)
    bulan = advance(t, advance(t, None, BU), LAN)
    assert bon.depth == 1 and bonham.depth == 2 and bulan.depth == 2
    assert is_terminal(t, bonham) == 0
    assert is_terminal(t, bulan) == 1
    assert t.num_terminals == 2


def test_empty_trie(toy):
    t = build_trie(toy, [])
    assert t.is_empty()
    for y in ([], [BON], [BON, HAM], [EOS]):
        assert not indicator_bruteforce(t, y)


def test_prefix_word_is_terminal_and_internal(toy):
    t = build_trie(toy, ["Bon", "Bonham"])
    bon = advance(t, None, BON)
    assert is_terminal(t, bon) == 0
    assert continuations(t, bon) == {HAM}
    assert is_terminal(t, advance(t, bon, HAM)) == 1


def test_advance_missing_edges(toy):
    t = build_trie(toy, ["Bonham", "Bulan"])
    assert advance(t, advance(t, None, BON), LAN) is None
    assert advance(t, None, EOS) is None


def test_is_terminal_on_partial(toy):
    t = build_trie(toy, ["Bonham"])
    assert is_terminal(t, advance(t, None, BON)) is None


def test_continuations(toy):
    t = build_trie(toy, ["Bonham"])
    assert continuations(t, advance(t, None, BON)) == {HAM}
    leaf = advance(t, advance(t, None, BON), HAM)
    assert continuations(t, leaf) == frozenset()


def test_indicator_examples(toy):
    t = build_trie(toy, ["Bonham", "Bulan"])
    assert indicator_bruteforce(t, [BU])
    assert not indicator_bruteforce(t, [HAM])
    assert not indicator_bruteforce(t, [])
    assert indicator_bruteforce(t, [LAN, BON, HAM])  # match starting mid-sequence


def test_duplicate_tokenizations_keep_first(toy):
    t = build_trie(toy, ["Bonham", "Bonham"])
    assert t.num_terminals == 1
    assert is_terminal(t, advance(t, advance(t, None, BON), HAM)) == 0


def test_untokenizable_word_named(toy):
    with pytest.raises(UntokenizableError, match="Bozo"):
        build_trie(toy, ["Bonham", "Bozo"])


def test_prefix_space_option():
    v = Vocabulary.from_units(["▁bon", "ham"])
    t = build_trie(v, ["bonham"], prefix_space=True)
    assert t.path_of(advance(t, advance(t, None, 2), 3).node) == [2, 3]


def test_dump_csv(tmp_path, toy):
    t = build_trie(toy, ["Bonham", "Bulan"])
    t.dump_csv(tmp_path / "trie.csv")
    rows = list(csv.DictReader(open(tmp_path / "trie.csv")))
    assert len(rows) == 5
    assert rows[0] == {"node_id": "0", "parent_id": "", "edge_token": "", "terminal_word": ""}
    assert sorted(r["terminal_word"] for r in rows if r["terminal_word"]) == ["Bonham", "Bulan"]


def test_occurrences():
    t = BiasTrie(["ab", "b"], [[2, 3], [3]])
    assert occurrences(t, [2, 3, 4, 3]) == [(0, 1, 0), (1, 1, 1), (3, 3, 1)]


def random_tries():
    return st.integers(0, 2 ** 32 - 1).map(lambda s: random_instance(s, vocab_size=12, max_words=8).trie)


@given(random_tries())
def test_paths_land_on_their_words(t):
    for node in range(1, len(t.nodes)):
        path = t.path_of(node)
        c = None
        for tok in path:
            c = advance(t, c, tok)
        assert c == TrieCursor(node, len(path))
        if t.nodes[node].terminal_word is not None:
            assert is_terminal(t, c) == t.nodes[node].terminal_word


@given(random_tries())
def test_continuations_match_advance(t):
    for node in range(len(t.nodes)):
        c = TrieCursor(node, len(t.path_of(node))) if node else None
        assert continuations(t, c) == {tok for tok in range(12) if advance(t, c, tok) is not None}


@settings(max_examples=300)
@given(random_tries(), st.lists(st.integers(0, 11), max_size=10))
def test_indicator_matches_traversal_set(t, y):
    assert indicator_bruteforce(t, y) == traversal_nonempty(t, y)
