"""Shared fixtures: the two worked example sentences used throughout."""

from __future__ import annotations

import pytest

from spancrf import DependencyTree, EntitySpan, Sentence, Token


@pytest.fixture
def womack() -> Sentence:
    """Lee Ann Womack won Single of the Year award.

    Heads: Lee->Womack, Ann->Womack, Womack->won, won root, Single->award,
    of->Single, the->Year, Year->of, award->won. Entities (1,3) PER and
    (5,8) MISC.
    """
    words = ["Lee", "Ann", "Womack", "won", "Single", "of", "the", "Year", "award"]
    pos = ["NNP", "NNP", "NNP", "VBD", "NN", "IN", "DT", "NNP", "NN"]
    heads = (3, 3, 4, 0, 9, 5, 8, 6, 4)
    rels = ("compound", "compound", "nsubj", "root", "compound", "case", "det", "nmod", "obj")
    return Sentence(
        tuple(Token(w, p) for w, p in zip(words, pos)),
        DependencyTree(heads, rels),
        (EntitySpan(1, 3, "PER"), EntitySpan(5, 8, "MISC")),
    )


@pytest.fixture
def shlomo() -> Sentence:
    """Foreign Minister Shlomo Ben - Ami gave a talk.

    Heads: Foreign->Minister, Minister->Ami, Shlomo->Ami, Ben->Ami,
    - ->Ami, Ami->gave, gave root, a->talk, talk->gave. Entity (3,6) PER.
    """
    words = ["Foreign", "Minister", "Shlomo", "Ben", "-", "Ami", "gave", "a", "talk"]
    pos = ["NNP", "NNP", "NNP", "NNP", "HYPH", "NNP", "VBD", "DT", "NN"]
    heads = (2, 6, 6, 6, 6, 7, 0, 9, 7)
    rels = ("compound", "compound", "compound", "compound", "punct", "nsubj", "root", "det", "obj")
    return Sentence(
        tuple(Token(w, p) for w, p in zip(words, pos)),
        DependencyTree(heads, rels),
        (EntitySpan(3, 6, "PER"),),
    )
