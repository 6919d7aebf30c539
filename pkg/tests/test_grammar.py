from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amlsi.dataset import compute_pairwise_constraints, extend_samples
from amlsi.grammar import accepts, build_pta, compression_stats, export_dfa, rpni
from amlsi.learner import induce

from conftest import benchmark_dataset


def test_pta_has_one_node_per_prefix():
    dfa = build_pta(["ab", "ac"])
    assert dfa.n_nodes == 4  # "", a, ab, ac
    assert dfa.n_transitions == 3
    dfa = build_pta(["abc", "abd", "b"])
    assert dfa.n_nodes == 6


def test_single_positive_with_negative_keeps_two_nodes():
    dfa = rpni(["a"], ["aa"])
    assert dfa.n_nodes == 2
    assert accepts(dfa, "a") and not accepts(dfa, "aa")


def test_single_positive_without_negatives_collapses_to_a_loop():
    dfa = rpni(["a"], [])
    assert dfa.n_nodes == 1
    assert accepts(dfa, "aaaa")


def test_even_length_language_without_prefix_closure():
    dfa = rpni(["", "ab", "abab"], ["a", "b", "aba", "ba", "abb"], prefix_closed=False)
    assert dfa.n_nodes == 2
    assert accepts(dfa, "ababab")
    assert not accepts(dfa, "aba")


def test_conflicting_samples_are_rejected():
    with pytest.raises(ValueError):
        rpni(["ab"], ["a"])


def test_gripper_automaton_size_and_consistency():
    # the published Gripper automaton has 8 nodes and 16 transitions
    for seed in (1, 2, 3):
        _, ds = benchmark_dataset("gripper", seed=seed)
        dfa, positives, negatives = induce(ds)
        assert 6 <= dfa.n_nodes <= 12
        assert all(accepts(dfa, p) for p in positives)
        assert not any(accepts(dfa, n) for n in negatives)


def test_compression_stats():
    _, ds = benchmark_dataset("gripper", seed=1)
    dfa, _, _ = induce(ds)
    states = sum(len(s) for s in ds.positives)
    stats = compression_stats(dfa, states)
    assert stats["compression"] == states / dfa.n_nodes


def test_export_format():
    text = export_dfa(rpni(["ab"], ["b"]))
    assert text.splitlines()[-1].startswith("final")
    assert "0 a 1" in text


_words = st.lists(st.text(alphabet="abc", max_size=6), min_size=1, max_size=8)


@settings(max_examples=60, deadline=None)
@given(positives=_words, candidates=_words)
def test_rpni_is_consistent_with_its_samples(positives, candidates):
    # in prefix-closed mode a negative must not be a prefix of a positive
    prefixes = {p[:i] for p in positives for i in range(len(p) + 1)}
    negatives = [c for c in candidates if c not in prefixes]
    dfa = rpni(positives, negatives)
    assert all(accepts(dfa, p) for p in positives)
    assert not any(accepts(dfa, n) for n in negatives)
    assert dfa.n_nodes <= len(prefixes)


@settings(max_examples=30, deadline=None)
@given(positives=_words)
def test_pta_accepts_exactly_the_prefixes(positives):
    dfa = build_pta(positives)
    prefixes = {p[:i] for p in positives for i in range(len(p) + 1)}
    assert dfa.n_nodes == len(prefixes)
    assert all(accepts(dfa, p) for p in prefixes)


def test_extended_samples_are_separated_on_every_benchmark():
    for name in ("blocksworld", "peg_solitaire", "neg_elevator"):
        _, ds = benchmark_dataset(name, seed=1)
        pc = compute_pairwise_constraints(ds.positives, ds.actions)
        positives, negatives = extend_samples(ds, pc)
        dfa = rpni(positives, negatives)
        assert all(accepts(dfa, p) for p in positives)
        assert not any(accepts(dfa, n) for n in negatives)
