"""Lattice DP: partition function, marginals, and Viterbi against oracles."""

from __future__ import annotations

import math

import numpy as np
import pytest

from spancrf.corpus import LabelSet
from spancrf.inference import (
    IOB_SCHEME,
    SEGMENT_SCHEME,
    InvariantViolation,
    ScoredLattice,
    Segmentation,
    allowed_mask,
    backward,
    forward,
    iob_labels,
    label_scheme,
    log_partition,
    marginals,
    mode_labels,
    segment_labels,
    viterbi,
)
from spancrf.lattice import MODE_KINDS, Mode, SpanLattice, build_lattice

from oracles import (
    brute_best_score,
    brute_log_partition,
    brute_marginals,
    chain_forward_logz,
    enumerate_labelings,
    path_score,
    random_sentence,
)


def scored_from(lattice, labels, scheme, rng=None, fill=0.0):
    mask = allowed_mask(lattice, labels, scheme)
    if rng is None:
        scores = np.where(mask, fill, -np.inf)
    else:
        scores = np.where(mask, rng.normal(scale=1.5, size=mask.shape), -np.inf)
    return ScoredLattice(lattice, labels, scores)


def singleton_lattice(n):
    return SpanLattice(n, frozenset((i, i) for i in range(1, n + 1)))


def random_scored(rng):
    sent = random_sentence(rng)
    kind = MODE_KINDS[int(rng.integers(len(MODE_KINDS)))]
    mode = Mode(kind, max_len=int(rng.integers(1, 5)))
    label_set = LabelSet(["PER"] if rng.random() < 0.5 else ["PER", "LOC"])
    labels = mode_labels(label_set, mode)
    lattice = build_lattice(sent, mode)
    return scored_from(lattice, labels, label_scheme(mode), rng=rng)


def test_label_schemes():
    assert label_scheme(Mode("linear")) == IOB_SCHEME
    for kind in ("semi", "dgm", "dgm-s"):
        assert label_scheme(Mode(kind)) == SEGMENT_SCHEME
    ls = LabelSet(["PER", "LOC"])
    assert segment_labels(ls) == ("O", "PER", "LOC")
    assert iob_labels(ls) == ("O", "B-PER", "I-PER", "B-LOC", "I-LOC")
    assert mode_labels(ls, Mode("linear")) == iob_labels(ls)
    assert mode_labels(ls, Mode("semi")) == segment_labels(ls)


def test_segment_mask_rules(womack):
    labels = ("O", "PER", "MISC")
    lattice = build_lattice(womack, Mode("dgm", 8))
    mask = allowed_mask(lattice, labels, SEGMENT_SCHEME)
    K = len(labels)
    for s, (u, v) in enumerate(lattice.sorted_spans()):
        # begin sentinel row exactly when the span starts the sentence
        assert mask[s, K].any() == (u == 1)
        assert mask[s, :K].any() == (u != 1)
        # O rides only on single words
        assert mask[s, :, 0].any() == (u == v)
        if u != v and u > 1:
            assert mask[s, :K, 1:].all()


def test_iob_mask_blocks_dangling_inside():
    labels = ("O", "B-PER", "I-PER", "B-LOC", "I-LOC")
    mask = allowed_mask(singleton_lattice(3), labels, IOB_SCHEME)
    K = len(labels)
    first, mid = 0, 1
    assert not mask[first, K, labels.index("I-PER")]
    assert mask[first, K, labels.index("B-PER")]
    assert mask[mid, labels.index("B-PER"), labels.index("I-PER")]
    assert mask[mid, labels.index("I-PER"), labels.index("I-PER")]
    assert not mask[mid, labels.index("O"), labels.index("I-PER")]
    assert not mask[mid, labels.index("B-LOC"), labels.index("I-PER")]
    # everything may follow anything when no inside tag is involved
    assert mask[mid, :K, labels.index("B-LOC")].all()


def test_allowed_mask_validation():
    lat = singleton_lattice(2)
    with pytest.raises(ValueError, match="scheme"):
        allowed_mask(lat, ("O", "A"), "bio")
    with pytest.raises(ValueError, match="label id 0"):
        allowed_mask(lat, ("A", "O"), SEGMENT_SCHEME)


def test_scored_lattice_validation():
    lat = singleton_lattice(2)
    labels = ("O", "A")
    with pytest.raises(ValueError, match="shape"):
        ScoredLattice(lat, labels, np.zeros((2, 2, 2)))
    bad = np.zeros((2, 3, 2))
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError, match="finite"):
        ScoredLattice(lat, labels, bad)
    bad[0, 0, 0] = np.inf
    with pytest.raises(ValueError, match="finite"):
        ScoredLattice(lat, labels, bad)

    scores = np.zeros((2, 3, 2))
    scores[1, 0, 1] = 2.5
    scored = ScoredLattice(lat, labels, scores)
    assert scored.n == 2
    assert scored.span_index((2, 2)) == 1
    assert scored.score((2, 2), 0, 1) == 2.5
    with pytest.raises(KeyError):
        scored.span_index((1, 2))


def test_segmentation_validation():
    seg = Segmentation((((1, 2), "PER"), ((3, 3), "O")))
    assert seg.n == 3
    assert seg.labels() == ("PER", "O")
    assert len(seg) == 2
    assert list(seg) == [((1, 2), "PER"), ((3, 3), "O")]
    with pytest.raises(ValueError):
        Segmentation(())
    with pytest.raises(ValueError, match="partition"):
        Segmentation((((1, 1), "O"), ((3, 3), "O")))
    with pytest.raises(ValueError, match="partition"):
        Segmentation((((2, 3), "O"),))
    with pytest.raises(ValueError, match="label"):
        Segmentation((((1, 1), ""),))


def test_log_partition_two_labelings():
    scored = scored_from(singleton_lattice(1), ("O", "PER"), SEGMENT_SCHEME)
    assert log_partition(scored) == pytest.approx(math.log(2), abs=1e-12)


def test_log_partition_two_squared_paths():
    scored = scored_from(singleton_lattice(2), ("O", "A"), IOB_SCHEME)
    assert log_partition(scored) == pytest.approx(math.log(4), abs=1e-12)


def test_uniform_marginals_are_half():
    scored = scored_from(singleton_lattice(1), ("O", "PER"), SEGMENT_SCHEME)
    m = marginals(scored)
    assert m[0, 2, 0] == pytest.approx(0.5)
    assert m[0, 2, 1] == pytest.approx(0.5)
    assert m[0, :2].sum() == 0.0


def test_viterbi_prefers_scored_label():
    lat = singleton_lattice(1)
    labels = ("O", "PER")
    scores = np.full((1, 3, 2), -np.inf)
    scores[0, 2, 0] = 0.0
    scores[0, 2, 1] = 1.0
    seg, best = viterbi(ScoredLattice(lat, labels, scores))
    assert seg.segments == (((1, 1), "PER"),)
    assert best == 1.0


def test_viterbi_tie_rule_all_singletons(womack):
    labels = ("O", "PER", "MISC")
    scored = scored_from(build_lattice(womack, Mode("dgm", 8)), labels, SEGMENT_SCHEME)
    seg, best = viterbi(scored)
    assert best == 0.0
    assert seg.segments == tuple((((i, i), "O")) for i in range(1, 10))


def test_viterbi_tie_prefers_shorter_last_segment():
    # both factors of the length-2 sentence score 1.0 overall: the span
    # (1,2) directly, the singleton path via 0.5 + 0.5
    lat = SpanLattice(2, frozenset({(1, 1), (2, 2), (1, 2)}))
    labels = ("O", "A")
    scores = np.full((3, 3, 2), -np.inf)
    idx = {span: i for i, span in enumerate(lat.sorted_spans())}
    scores[idx[(1, 1)], 2, 1] = 0.5
    scores[idx[(2, 2)], 1, 1] = 0.5
    scores[idx[(1, 2)], 2, 1] = 1.0
    seg, best = viterbi(ScoredLattice(lat, labels, scores))
    assert best == pytest.approx(1.0)
    assert seg.segments == (((1, 1), "A"), ((2, 2), "A"))


def test_dp_matches_enumeration_oracles():
    rng = np.random.default_rng(20)
    for _ in range(60):
        scored = random_scored(rng)
        labelings = enumerate_labelings(scored)
        assert labelings, "every lattice admits the all-singleton path"
        assert log_partition(scored) == pytest.approx(brute_log_partition(scored), abs=1e-10)
        np.testing.assert_allclose(marginals(scored), brute_marginals(scored), atol=1e-10)
        seg, best = viterbi(scored)
        assert best == pytest.approx(brute_best_score(scored), abs=1e-10)
        # the returned segmentation really has the returned score
        idx = {span: i for i, span in enumerate(scored.spans)}
        lab = [(idx[span], scored.labels.index(y)) for span, y in seg]
        assert path_score(scored, lab) == pytest.approx(best, abs=1e-10)


def test_marginals_normalize_at_every_position():
    rng = np.random.default_rng(21)
    for _ in range(25):
        scored = random_scored(rng)
        m = marginals(scored)
        for p in range(1, scored.n + 1):
            covering = [s for s, (u, v) in enumerate(scored.spans) if u <= p <= v]
            assert sum(m[s].sum() for s in covering) == pytest.approx(1.0, abs=1e-9)
        # forbidden factors carry no mass
        assert (m[np.isneginf(scored.scores)] == 0).all()


def test_linear_mode_is_a_textbook_chain_crf():
    rng = np.random.default_rng(22)
    for _ in range(20):
        n = int(rng.integers(1, 9))
        labels = ("O", "B-A", "I-A", "B-B", "I-B")
        K = len(labels)
        lat = singleton_lattice(n)
        mask = allowed_mask(lat, labels, IOB_SCHEME)
        emit = rng.normal(size=(n, K))
        trans = rng.normal(size=(K + 1, K))
        scores = np.empty((n, K + 1, K))
        for i in range(n):
            scores[i] = emit[i][None, :] + trans
        scores[~mask] = -np.inf
        logz = log_partition(ScoredLattice(lat, labels, scores))

        chain_trans = np.where(mask[1] if n > 1 else True, trans, -np.inf)[:K]
        begin = np.where(mask[0][K], trans[K] + 0.0, -np.inf)
        want = chain_forward_logz(emit, chain_trans, begin)
        assert logz == pytest.approx(want, abs=1e-10)


def test_shrinking_the_lattice_never_raises_logz():
    rng = np.random.default_rng(23)
    for _ in range(20):
        sent = random_sentence(rng, n=int(rng.integers(2, 7)))
        lattice = build_lattice(sent, Mode("semi", 4))
        labels = ("O", "A")
        scored = scored_from(lattice, labels, SEGMENT_SCHEME, rng=rng)
        multi = [span for span in scored.spans if span[1] > span[0]]
        if not multi:
            continue
        drop = multi[int(rng.integers(len(multi)))]
        keep = [s for s, span in enumerate(scored.spans) if span != drop]
        smaller = ScoredLattice(
            SpanLattice(lattice.n, frozenset(span for span in scored.spans if span != drop)),
            labels,
            scored.scores[keep],
        )
        assert log_partition(smaller) <= log_partition(scored) + 1e-12


def test_logz_bounds_viterbi_and_dominance_closes_the_gap():
    rng = np.random.default_rng(24)
    for _ in range(15):
        scored = random_scored(rng)
        _, best = viterbi(scored)
        logz = log_partition(scored)
        assert logz >= best - 1e-12
    # boost one full path far above the rest: the bound becomes tight
    lat = singleton_lattice(4)
    labels = ("O", "A")
    mask = allowed_mask(lat, labels, SEGMENT_SCHEME)
    scores = np.where(mask, 0.0, -np.inf)
    prev = 2
    for s in range(4):
        scores[s, prev, 1] = 60.0
        prev = 1
    scored = ScoredLattice(lat, labels, scores)
    seg, best = viterbi(scored)
    assert best == pytest.approx(240.0)
    assert seg.labels() == ("A", "A", "A", "A")
    assert log_partition(scored) == pytest.approx(best, abs=1e-9)


def test_gapped_lattice_raises_invariant_violation():
    lat = SpanLattice(3, frozenset({(1, 1), (3, 3)}))
    labels = ("O", "A")
    scores = np.zeros((2, 3, 2))
    scored = ScoredLattice(lat, labels, scores)
    with pytest.raises(InvariantViolation, match="position 2"):
        forward(scored)
    with pytest.raises(InvariantViolation):
        log_partition(scored)
    with pytest.raises(InvariantViolation):
        viterbi(scored)


def test_extreme_scores_stay_finite():
    rng = np.random.default_rng(25)
    lat = singleton_lattice(6)
    labels = ("O", "A", "B")
    mask = allowed_mask(lat, labels, SEGMENT_SCHEME)
    with np.errstate(over="raise"):
        for fill in (-1e4, 1e4):
            scored = ScoredLattice(lat, labels, np.where(mask, fill, -np.inf))
            logz = log_partition(scored)
            assert math.isfinite(logz)
            assert logz == pytest.approx(6 * fill + math.log(3 ** 6), rel=1e-12)
        spread = np.where(mask, rng.uniform(-1e4, 1e4, size=mask.shape), -np.inf)
        scored = ScoredLattice(lat, labels, spread)
        m = marginals(scored)
        assert np.isfinite(log_partition(scored))
        # exponent arithmetic at 1e4 scale leaves ~1e-12 relative slack
        assert ((m >= 0) & (m <= 1 + 1e-9)).all()


def test_forward_backward_agree_on_logz():
    rng = np.random.default_rng(26)
    for _ in range(20):
        scored = random_scored(rng)
        K = len(scored.labels)
        alpha = forward(scored)
        beta = backward(scored)
        assert np.logaddexp.reduce(alpha[scored.n, :K]) == pytest.approx(beta[0, K], abs=1e-10)
