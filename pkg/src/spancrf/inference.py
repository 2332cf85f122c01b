"""Log-space dynamic programming over a span lattice.

A sentence's factor graph has one factor per (span, previous label, label)
triple. Scores live in a dense float64 array of shape (S, K+1, K) aligned
with SpanLattice.sorted_spans(): axis 0 is the span, axis 1 the previous
label (index K is the begin sentinel), axis 2 the label of the span.
-inf marks combinations the labeling rule forbids.

Labeling rules (per scheme):
  segment  entity labels on any allowed span, O only on length-1 spans,
           transitions unrestricted
  iob      length-1 spans with IOB tags, I-X only after B-X or I-X

Forward/backward, the partition function, factor marginals, and Viterbi
all run in log space; sums use logaddexp, which is exact on -inf pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import LabelSet
from .lattice import LINEAR, Mode, SpanLattice

SEGMENT_SCHEME = "segment"
IOB_SCHEME = "iob"


class InvariantViolation(RuntimeError):
    """A structural guarantee of the DP broke; indicates a bug, not bad input."""


def label_scheme(mode: Mode) -> str:
    return IOB_SCHEME if mode.kind == LINEAR else SEGMENT_SCHEME


def segment_labels(label_set: LabelSet) -> tuple[str, ...]:
    return ("O",) + label_set.entity_types


def iob_labels(label_set: LabelSet) -> tuple[str, ...]:
    out = ["O"]
    for etype in label_set.entity_types:
        out.append(f"B-{etype}")
        out.append(f"I-{etype}")
    return tuple(out)


def mode_labels(label_set: LabelSet, mode: Mode) -> tuple[str, ...]:
    if label_scheme(mode) == IOB_SCHEME:
        return iob_labels(label_set)
    return segment_labels(label_set)


def _iob_pair_mask(labels: tuple[str, ...]) -> np.ndarray:
    """(K+1, K) bool: may label y follow previous label p (p = K is begin)."""
    K = len(labels)
    pair = np.ones((K + 1, K), dtype=bool)
    for y, lab in enumerate(labels):
        if lab.startswith("I-"):
            inside = (f"B-{lab[2:]}", f"I-{lab[2:]}")
            for p in range(K + 1):
                pair[p, y] = p < K and labels[p] in inside
    return pair


def allowed_mask(lattice: SpanLattice, labels: tuple[str, ...], scheme: str) -> np.ndarray:
    """(S, K+1, K) bool mask of factors permitted by the labeling rule.

    The begin-sentinel row (previous label K) is on only for spans starting
    at position 1, and those spans accept no other previous label.
    """
    if scheme not in (SEGMENT_SCHEME, IOB_SCHEME):
        raise ValueError(f"unknown labeling scheme {scheme!r}")
    if labels[0] != "O":
        raise ValueError("label id 0 must be O")
    spans = lattice.sorted_spans()
    K = len(labels)
    pair = _iob_pair_mask(labels) if scheme == IOB_SCHEME else np.ones((K + 1, K), dtype=bool)
    mask = np.zeros((len(spans), K + 1, K), dtype=bool)
    for s, (u, v) in enumerate(spans):
        row = pair.copy()
        if u == 1:
            row[:K, :] = False
        else:
            row[K, :] = False
        if scheme == SEGMENT_SCHEME and v > u:
            row[:, 0] = False
        mask[s] = row
    return mask


@dataclass
class ScoredLattice:
    """Span lattice plus the factor log-score table w·f."""

    lattice: SpanLattice
    labels: tuple[str, ...]
    scores: np.ndarray
    spans: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self) -> None:
        self.spans = self.lattice.sorted_spans()
        K = len(self.labels)
        want = (len(self.spans), K + 1, K)
        if self.scores.shape != want:
            raise ValueError(f"score table shape {self.scores.shape}, expected {want}")
        if np.isnan(self.scores).any() or np.isposinf(self.scores).any():
            raise ValueError("factor scores must be finite or -inf")
        # span indices grouped by end / by start; ends lists go shorter
        # span first, which is the Viterbi tie order
        n = self.lattice.n
        self._ends_at: list[list[int]] = [[] for _ in range(n + 1)]
        self._starts_at: list[list[int]] = [[] for _ in range(n + 2)]
        for s, (u, v) in enumerate(self.spans):
            self._ends_at[v].append(s)
            self._starts_at[u].append(s)
        for j in range(1, n + 1):
            self._ends_at[j].sort(key=lambda s: -self.spans[s][0])

    @property
    def n(self) -> int:
        return self.lattice.n

    def span_index(self, span: tuple[int, int]) -> int:
        try:
            return self.spans.index(span)
        except ValueError:
            raise KeyError(f"span {span} not in lattice") from None

    def score(self, span: tuple[int, int], y_prev: int, y: int) -> float:
        return float(self.scores[self.span_index(span), y_prev, y])


@dataclass(frozen=True)
class Segmentation:
    """Contiguous (span, label) sequence partitioning positions 1..n."""

    segments: tuple[tuple[tuple[int, int], str], ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("empty segmentation")
        expect = 1
        for (u, v), label in self.segments:
            if u != expect or v < u:
                raise ValueError(f"segments do not partition 1..n: bad span ({u},{v})")
            if not label:
                raise ValueError("empty label")
            expect = v + 1

    @property
    def n(self) -> int:
        return self.segments[-1][0][1]

    def labels(self) -> tuple[str, ...]:
        return tuple(label for _, label in self.segments)

    def __iter__(self):
        return iter(self.segments)

    def __len__(self) -> int:
        return len(self.segments)


def forward(scored: ScoredLattice) -> np.ndarray:
    """alpha[j, p]: log-sum of partial segmentations of 1..j ending in label p.

    Column K is the begin sentinel, finite only at j = 0. log Z is the
    logsumexp of alpha[n, :K].
    """
    n, K = scored.n, len(scored.labels)
    alpha = np.full((n + 1, K + 1), -np.inf)
    alpha[0, K] = 0.0
    for j in range(1, n + 1):
        if not scored._ends_at[j]:
            raise InvariantViolation(f"no spans end at position {j}")
        acc = np.full(K, -np.inf)
        for s in scored._ends_at[j]:
            u = scored.spans[s][0]
            inc = np.logaddexp.reduce(alpha[u - 1, :, None] + scored.scores[s], axis=0)
            acc = np.logaddexp(acc, inc)
        alpha[j, :K] = acc
    return alpha


def backward(scored: ScoredLattice) -> np.ndarray:
    """beta[j, p]: log-sum of completions of j+1..n given label p at j."""
    n, K = scored.n, len(scored.labels)
    beta = np.full((n + 1, K + 1), -np.inf)
    beta[n, :K] = 0.0
    for j in range(n - 1, -1, -1):
        acc = np.full(K + 1, -np.inf)
        for s in scored._starts_at[j + 1]:
            v = scored.spans[s][1]
            inc = np.logaddexp.reduce(scored.scores[s] + beta[v, :K][None, :], axis=1)
            acc = np.logaddexp(acc, inc)
        beta[j] = acc
    return beta


def log_partition(scored: ScoredLattice) -> float:
    alpha = forward(scored)
    logz = np.logaddexp.reduce(alpha[scored.n, : len(scored.labels)])
    if not np.isfinite(logz):
        raise InvariantViolation("non-finite partition function")
    return float(logz)


def marginals(scored: ScoredLattice) -> np.ndarray:
    """Posterior probability of every factor, same shape and order as scores.

    m[s, p, y] = P(span s has label y and is preceded by label p). Factors
    the labeling rule forbids get 0. For every position, the marginals of
    factors covering it sum to 1.
    """
    alpha = forward(scored)
    beta = backward(scored)
    K = len(scored.labels)
    logz = np.logaddexp.reduce(alpha[scored.n, :K])
    if not np.isfinite(logz):
        raise InvariantViolation("non-finite partition function")
    m = np.empty_like(scored.scores)
    for s, (u, v) in enumerate(scored.spans):
        m[s] = np.exp(alpha[u - 1, :, None] + scored.scores[s] + beta[v, :K][None, :] - logz)
    return m


def viterbi(scored: ScoredLattice) -> tuple[Segmentation, float]:
    """Maximum-scoring segmentation and its log-score.

    Ties prefer the shorter last segment, then the smaller previous-label
    id within a cell, then the smaller label id at the end boundary; with
    all scores equal this yields the all-singleton all-O segmentation.
    """
    n, K = scored.n, len(scored.labels)
    vit = np.full((n + 1, K + 1), -np.inf)
    vit[0, K] = 0.0
    back_span = np.full((n + 1, K), -1, dtype=np.int64)
    back_prev = np.full((n + 1, K), -1, dtype=np.int64)
    cols = np.arange(K)
    for j in range(1, n + 1):
        best = np.full(K, -np.inf)
        for s in scored._ends_at[j]:
            u = scored.spans[s][0]
            cand = vit[u - 1, :, None] + scored.scores[s]
            p_star = np.argmax(cand, axis=0)
            val = cand[p_star, cols]
            better = val > best
            best[better] = val[better]
            back_span[j, better] = s
            back_prev[j, better] = p_star[better]
        vit[j, :K] = best
    finite = np.isfinite(vit[n, :K])
    if not finite.any():
        raise InvariantViolation("no complete segmentation")
    top = vit[n, :K].max()
    last_len = np.array(
        [scored.spans[back_span[n, y]][1] - scored.spans[back_span[n, y]][0] if finite[y] else n for y in range(K)]
    )
    y = min((y for y in range(K) if vit[n, y] == top), key=lambda y: (last_len[y], y))
    segments = []
    j = n
    while j > 0:
        s = back_span[j, y]
        p = back_prev[j, y]
        u, v = scored.spans[s]
        segments.append(((u, v), scored.labels[y]))
        j = u - 1
        if j == 0:
            if p != K:
                raise InvariantViolation("backtrace did not reach the begin sentinel")
            break
        y = p
    segments.reverse()
    return Segmentation(tuple(segments)), float(top)
