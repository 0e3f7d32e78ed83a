from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from keyfab.keyspace import (
    EmptyChunk,
    EmptyKey,
    InvalidChunk,
    KeyExpr,
    NotConcreteKey,
    Sample,
    SampleKind,
    enumerate_exprs,
    includes,
    intersects,
    parse_keyexpr,
)

from . import oracles


def ke(text: str) -> KeyExpr:
    return parse_keyexpr(text)


class TestParse:
    def test_literal_chunks(self):
        k = ke("robot1/joints/3/state")
        assert k.chunks == ("robot1", "joints", "3", "state")
        assert k.is_concrete

    def test_double_deep_wild_collapses(self):
        assert ke("a/**/**/b").chunks == ("a", "**", "b")
        assert ke("**/**/**").chunks == ("**",)

    def test_empty_chunk_rejected(self):
        with pytest.raises(EmptyChunk):
            ke("a//b")
        with pytest.raises(EmptyChunk):
            ke("/a")
        with pytest.raises(EmptyChunk):
            ke("a/")

    def test_empty_key_rejected(self):
        with pytest.raises(EmptyKey):
            ke("")

    def test_mixed_wildcard_chunk_rejected(self):
        with pytest.raises(InvalidChunk):
            ke("a*/b")
        with pytest.raises(InvalidChunk):
            ke("***")

    def test_round_trip(self):
        for text in ("a", "a/b/c", "a/*/c", "**", "a/**/c", "tf/world/base"):
            assert str(ke(text)) == text
            assert parse_keyexpr(str(ke(text))) == ke(text)


class TestMatching:
    def test_exact_equality_intersects(self):
        assert intersects(ke("a/b"), ke("a/b"))

    def test_deep_wild_intersects_concrete(self):
        assert intersects(ke("robot1/joints/**"), ke("robot1/joints/3/position"))

    def test_distinct_literals_disjoint(self):
        assert not intersects(ke("robot1/*/state"), ke("robot2/joint/state"))

    def test_universal_includes_anything(self):
        assert includes(ke("**"), ke("anything/at/all"))

    def test_single_wild_is_one_chunk(self):
        assert not includes(ke("a/*"), ke("a/b/c"))

    def test_deep_wild_spans_include(self):
        assert includes(ke("a/**/c"), ke("a/b/c"))

    def test_star_deepwild_covers_deepwild(self):
        # every key has at least one chunk, so */** covers ** exactly
        assert includes(ke("*/**"), ke("**"))
        assert includes(ke("**/*"), ke("*/**"))
        assert not includes(ke("*/*"), ke("**"))

    def test_matches_requires_concrete(self):
        with pytest.raises(NotConcreteKey):
            ke("a/**").matches(ke("a/*"))

    def test_matches_basic(self):
        assert ke("a/**/c").matches("a/b/b/c")
        assert not ke("a/**/c").matches("a/b/b")


ALPHABET = ("a", "b", "c")
SMALL_EXPRS = list(enumerate_exprs(ALPHABET, 3))
SMALL_KEYS = oracles.key_universe(ALPHABET, 4)


@pytest.fixture(scope="module")
def small_bits():
    return {e.chunks: oracles.match_bits(e.chunks, SMALL_KEYS) for e in SMALL_EXPRS}


class TestOracleAgreementSmall:
    """Spot-check against the alignment oracle on a reduced corpus.

    The full exhaustive sweep (expressions of up to 4 chunks, keys of up
    to 5) lives in the acceptance suite.
    """

    def test_match_agrees_with_alignment_oracle(self, small_bits):
        for e in SMALL_EXPRS:
            bits = 0
            for i, key in enumerate(SMALL_KEYS):
                if e.matches(KeyExpr(key)):
                    bits |= 1 << i
            assert bits == small_bits[e.chunks], f"mismatch on {e}"

    def test_intersects_agrees(self, small_bits):
        for a in SMALL_EXPRS[::7]:
            for b in SMALL_EXPRS:
                expected = (small_bits[a.chunks] & small_bits[b.chunks]) != 0
                assert intersects(a, b) == expected, f"{a} ~ {b}"

    def test_includes_agrees(self, small_bits):
        for a in SMALL_EXPRS[::7]:
            for b in SMALL_EXPRS:
                expected = (small_bits[b.chunks] & ~small_bits[a.chunks]) == 0
                assert includes(a, b) == expected, f"{a} >= {b}"


expr_strategy = st.builds(
    lambda chunks: parse_keyexpr("/".join(chunks)),
    st.lists(st.sampled_from(["a", "b", "c", "*", "**"]), min_size=1, max_size=5),
)


class TestProperties:
    @settings(max_examples=300)
    @given(expr_strategy, expr_strategy)
    def test_intersects_symmetric(self, a, b):
        assert intersects(a, b) == intersects(b, a)

    @settings(max_examples=300)
    @given(expr_strategy, expr_strategy)
    def test_includes_implies_intersects(self, a, b):
        if includes(a, b):
            assert intersects(a, b)

    @settings(max_examples=300)
    @given(expr_strategy)
    def test_parse_render_round_trip(self, e):
        assert parse_keyexpr(str(e)) == e

    @settings(max_examples=300)
    @given(expr_strategy)
    def test_self_relations(self, e):
        assert intersects(e, e)
        assert includes(e, e)


class TestSample:
    def test_concrete_key_required(self):
        with pytest.raises(NotConcreteKey):
            Sample(ke("a/*"), b"", SampleKind.PUT, "n1", 0, 0.0)

    def test_fields(self):
        s = Sample(ke("a/b"), b"xy", SampleKind.PUT, "n1", 3, 12.5)
        assert s.key.chunks == ("a", "b")
        assert s.sequence == 3
