"""Regularized negative log-likelihood training over span lattices.

value    = sum_i log Z_i - sum_i w.f(x_i, y_i) + lambda ||w||^2
grad_k   = sum_i (E[f_k] - f_k(x_i, y_i)) + 2 lambda w_k

The corpus is compiled once into fixed 64-sentence blocks. A factor score
decomposes as emission(span, y) + transition(y_prev, y), so each block
stores a sparse count matrix over emission columns (a column is one live
(span, label) pair of one sentence) plus aggregated gold counts; one
objective call then costs a sparse matvec per block plus the
span-proportional DP per sentence. Blocks are evaluated independently,
optionally in a fork pool, and reduced in block order, so the result is
bitwise identical for any worker count.
"""

from __future__ import annotations

import json
import logging
import multiprocessing
import time
from collections import Counter
from dataclasses import dataclass, replace

import numpy as np
import scipy.optimize
from scipy import sparse

from .corpus import EntitySpan, LabelSet, Sentence, SerializationError, iob_to_spans, spans_to_iob
from .features import BOS, FeatureIndex, _position_templates, _segment_templates, transition_feature
from .inference import (
    IOB_SCHEME,
    ScoredLattice,
    Segmentation,
    allowed_mask,
    backward,
    forward,
    label_scheme,
    mode_labels,
    viterbi,
)
from .lattice import Mode, SpanLattice, build_lattice

logger = logging.getLogger(__name__)

MODEL_VERSION = 1
_BLOCK_SIZE = 64


class TrainingError(RuntimeError):
    """Optimization failed (non-finite objective or similar)."""


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and cross-validation settings.

    l2 is the regularization coefficient used by fit(); lambda_grid is what
    cross_validate() searches. ftol is the relative objective-change stop,
    gtol the gradient infinity-norm stop.
    """

    l2: float = 0.1
    lambda_grid: tuple[float, ...] = (0.0001, 0.001, 0.01, 0.1, 1.0)
    folds: int = 10
    max_iter: int = 200
    ftol: float = 1e-6
    gtol: float = 1e-6
    workers: int = 1
    dep_features: bool = True
    seed: int = 42

    def __post_init__(self) -> None:
        if self.l2 < 0 or any(lam < 0 for lam in self.lambda_grid):
            raise ValueError("regularization must be non-negative")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        if self.max_iter < 1 or self.workers < 1:
            raise ValueError("max_iter and workers must be positive")
        if self.ftol <= 0 or self.gtol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class Model:
    """Frozen feature index, labels, and trained weights for one mode."""

    mode: Mode
    labels: tuple[str, ...]
    index: FeatureIndex
    weights: np.ndarray
    lam: float
    dep_features: bool = True

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.index):
            raise ValueError(f"{len(self.weights)} weights for {len(self.index)} features")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")

    @property
    def max_len(self) -> int:
        return self.mode.max_len

    def save(self, path) -> None:
        doc = {
            "version": MODEL_VERSION,
            "mode": self.mode.kind,
            "L": self.mode.max_len,
            "lambda": self.lam,
            "dep_features": self.dep_features,
            "labels": list(self.labels),
            "features": list(self.index.strings()),
            "weights": [float(w) for w in self.weights],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)

    @classmethod
    def load(cls, path) -> "Model":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict) or doc.get("version") != MODEL_VERSION:
            raise SerializationError(f"unsupported model version {doc.get('version')!r}")
        try:
            mode = Mode(doc["mode"], doc["L"])
            labels = tuple(doc["labels"])
            features = doc["features"]
            weights = np.asarray(doc["weights"], dtype=np.float64)
            lam = float(doc["lambda"])
            dep = bool(doc["dep_features"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SerializationError(f"malformed model file: {exc}") from exc
        if len(features) != len(weights):
            raise SerializationError(f"{len(weights)} weights for {len(features)} features")
        index = FeatureIndex()
        for f in features:
            index.intern(f)
        index.freeze()
        return cls(mode=mode, labels=labels, index=index, weights=weights, lam=lam, dep_features=dep)


def _emission_templates(sentence: Sentence, span: tuple[int, int], scheme: str, dep: bool) -> list[str]:
    if scheme == IOB_SCHEME:
        return _position_templates(sentence, span[0], dep)
    return _segment_templates(sentence, span, dep)


def _iob_gold(sentence: Sentence) -> Segmentation:
    tags = spans_to_iob(sentence.gold, sentence.n)
    return Segmentation(tuple(((i, i), tags[i - 1]) for i in range(1, sentence.n + 1)))


def _segment_gold(sentence: Sentence, lattice: SpanLattice, split: bool, name: str = "?") -> tuple[Segmentation, int]:
    segments: list[tuple[tuple[int, int], str]] = []
    splits = 0
    pos = 1
    for span in sentence.gold:
        while pos < span.start:
            segments.append(((pos, pos), "O"))
            pos += 1
        if (span.start, span.end) in lattice.allowed:
            segments.append(((span.start, span.end), span.etype))
        elif split:
            splits += 1
            segments.extend(((i, i), span.etype) for i in range(span.start, span.end + 1))
        else:
            raise ValueError(f"sentence {name}: gold span ({span.start},{span.end}) not in lattice")
        pos = span.end + 1
    while pos <= sentence.n:
        segments.append(((pos, pos), "O"))
        pos += 1
    return Segmentation(tuple(segments)), splits


def project_gold(sentence: Sentence, lattice: SpanLattice) -> tuple[Segmentation, int]:
    """Gold as a lattice segmentation, splitting unrepresentable entities.

    An entity whose span is not in the lattice becomes single-token spans
    that all carry its type; uncovered positions become O singletons.
    Returns the segmentation and the number of entities split.
    """
    return _segment_gold(sentence, lattice, split=True)


@dataclass
class _SentenceComp:
    scored: ScoredLattice
    neg_mask: np.ndarray  # (S, K+1, K) bool, True where the factor is forbidden
    col_id: np.ndarray  # (S, K) int64 block-local emission column, -1 dead


@dataclass
class _Block:
    comps: list[_SentenceComp]
    emit: sparse.csr_matrix  # (ncols, D) feature counts per emission column
    gold_ids: np.ndarray
    gold_cnts: np.ndarray
    ncols: int


@dataclass
class _Compiled:
    blocks: list[_Block]
    trans_ids: np.ndarray  # (K+1, K) int64 feature id of each transition, -1 absent
    labels: tuple[str, ...]
    num_features: int
    splits: int


def _gold_counts(sentence: Sentence, seg: Segmentation, scheme: str, index: FeatureIndex, dep: bool) -> Counter:
    counts: Counter = Counter()
    y_prev = BOS
    for span, label in seg:
        base = Counter(_emission_templates(sentence, span, scheme, dep))
        for template, c in base.items():
            fid = index.intern(f"{template}|{label}")
            if fid is not None:
                counts[fid] += c
        tid = index.intern(transition_feature(y_prev, label))
        if tid is not None:
            counts[tid] += 1
        y_prev = label
    return counts


def _compile(
    corpus: list[Sentence],
    mode: Mode,
    labels: tuple[str, ...],
    index: FeatureIndex,
    dep: bool,
    project: bool,
) -> _Compiled:
    scheme = label_scheme(mode)
    K = len(labels)
    prev_names = labels + (BOS,)
    pair_seen = np.zeros((K + 1, K), dtype=bool)
    splits_total = 0
    raw_blocks = []
    for block_start in range(0, len(corpus), _BLOCK_SIZE):
        chunk = corpus[block_start : block_start + _BLOCK_SIZE]
        comps: list[_SentenceComp] = []
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        ncols = 0
        gold: Counter = Counter()
        for offset, sentence in enumerate(chunk):
            lat = build_lattice(sentence, mode)
            mask = allowed_mask(lat, labels, scheme)
            spans = lat.sorted_spans()
            live = mask.any(axis=1)  # (S, K)
            for p, y in np.argwhere(mask.any(axis=0) & ~pair_seen):
                pair_seen[p, y] = True
                index.intern(transition_feature(prev_names[p], labels[y]))
            col_id = np.full((len(spans), K), -1, dtype=np.int64)
            for s, span in enumerate(spans):
                base = Counter(_emission_templates(sentence, span, scheme, dep))
                for y in range(K):
                    if not live[s, y]:
                        continue
                    col_id[s, y] = ncols
                    ncols += 1
                    for template, c in base.items():
                        fid = index.intern(f"{template}|{labels[y]}")
                        if fid is not None:
                            indices.append(fid)
                            data.append(float(c))
                    indptr.append(len(indices))
            if scheme == IOB_SCHEME:
                seg = _iob_gold(sentence)
            elif project:
                seg, nsplit = project_gold(sentence, lat)
                splits_total += nsplit
            else:
                seg, _ = _segment_gold(sentence, lat, split=False, name=str(block_start + offset + 1))
            gold.update(_gold_counts(sentence, seg, scheme, index, dep))
            scored = ScoredLattice(lat, labels, np.zeros((len(spans), K + 1, K)))
            comps.append(_SentenceComp(scored, ~mask, col_id))
        raw_blocks.append((comps, indptr, indices, data, ncols, gold))
    num_features = len(index)
    blocks = []
    for comps, indptr, indices, data, ncols, gold in raw_blocks:
        emit = sparse.csr_matrix(
            (np.asarray(data), np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int64)),
            shape=(ncols, num_features),
        )
        gold_ids = np.fromiter(gold.keys(), dtype=np.int64, count=len(gold))
        gold_cnts = np.fromiter(gold.values(), dtype=np.float64, count=len(gold))
        blocks.append(_Block(comps, emit, gold_ids, gold_cnts, ncols))
    trans_ids = np.full((K + 1, K), -1, dtype=np.int64)
    for p in range(K + 1):
        for y in range(K):
            fid = index.lookup(transition_feature(prev_names[p], labels[y]))
            if fid is not None:
                trans_ids[p, y] = fid
    return _Compiled(blocks, trans_ids, labels, num_features, splits_total)


def _transition_weights(w: np.ndarray, trans_ids: np.ndarray) -> np.ndarray:
    tw = np.zeros(trans_ids.shape)
    sel = trans_ids >= 0
    tw[sel] = w[trans_ids[sel]]
    return tw


def _eval_block(block: _Block, w: np.ndarray, tw: np.ndarray, trans_ids: np.ndarray) -> tuple[float, np.ndarray]:
    K = tw.shape[1]
    emissions = block.emit @ w  # (ncols,)
    mcol = np.zeros(block.ncols)
    mtrans = np.zeros(tw.shape)
    value = 0.0
    for comp in block.comps:
        scored = comp.scored
        live = comp.col_id >= 0
        e_sy = np.zeros(comp.col_id.shape)
        e_sy[live] = emissions[comp.col_id[live]]
        np.copyto(scored.scores, e_sy[:, None, :] + tw[None, :, :])
        scored.scores[comp.neg_mask] = -np.inf
        alpha = forward(scored)
        beta = backward(scored)
        logz = np.logaddexp.reduce(alpha[scored.n, :K])
        value += logz
        msy = np.empty(comp.col_id.shape)
        for s, (u, v) in enumerate(scored.spans):
            mval = np.exp(alpha[u - 1, :, None] + scored.scores[s] + beta[v, :K][None, :] - logz)
            msy[s] = mval.sum(axis=0)
            mtrans += mval
        mcol[comp.col_id[live]] = msy[live]
    grad = block.emit.T @ mcol
    sel = trans_ids >= 0
    grad[trans_ids[sel]] += mtrans[sel]
    grad[block.gold_ids] -= block.gold_cnts
    value -= float(w[block.gold_ids] @ block.gold_cnts)
    return value, grad


_FORK_STATE: _Compiled | None = None


def _worker_eval(args) -> tuple[float, np.ndarray]:
    bidx, w, tw = args
    return _eval_block(_FORK_STATE.blocks[bidx], w, tw, _FORK_STATE.trans_ids)


class Objective:
    """Callable (value, gradient) of the regularized objective at w.

    With workers > 1, blocks are farmed out to a fork pool; partial results
    are reduced in block order either way, so the value and gradient do not
    depend on the worker count.
    """

    def __init__(self, compiled: _Compiled, l2: float, workers: int = 1):
        self.compiled = compiled
        self.l2 = float(l2)
        self.evals = 0
        self.last_value: float | None = None
        self._pool = None
        if workers > 1:
            global _FORK_STATE
            _FORK_STATE = compiled
            self._pool = multiprocessing.get_context("fork").Pool(workers)

    def __call__(self, w: np.ndarray) -> tuple[float, np.ndarray]:
        w = np.asarray(w, dtype=np.float64)
        if not np.isfinite(w).all():
            raise TrainingError("non-finite weights")
        tw = _transition_weights(w, self.compiled.trans_ids)
        if self._pool is not None:
            parts = self._pool.map(_worker_eval, [(b, w, tw) for b in range(len(self.compiled.blocks))])
        else:
            parts = [_eval_block(block, w, tw, self.compiled.trans_ids) for block in self.compiled.blocks]
        value = 0.0
        grad = np.zeros(self.compiled.num_features)
        for v, g in parts:
            value += v
            grad += g
        value += self.l2 * float(w @ w)
        grad += 2.0 * self.l2 * w
        if not np.isfinite(value):
            raise TrainingError("non-finite objective value")
        self.evals += 1
        self.last_value = value
        return value, grad

    def close(self) -> None:
        if self._pool is not None:
            self._pool.close()
            self._pool.join()
            self._pool = None


def objective_and_gradient(model: Model, corpus: list[Sentence]) -> tuple[float, np.ndarray]:
    """Objective value and gradient at the model's weights.

    Every gold entity span must be present in its sentence's lattice;
    otherwise a ValueError names the sentence and span.
    """
    if not corpus:
        raise ValueError("empty corpus")
    compiled = _compile(corpus, model.mode, model.labels, model.index, model.dep_features, project=False)
    return Objective(compiled, model.lam)(model.weights)


def fit(corpus: list[Sentence], config: TrainConfig, mode: Mode, on_iteration=None) -> Model:
    """Train by L-BFGS (history 10) from w = 0.

    Unrepresentable gold entities are first split into typed singletons.
    on_iteration(k, value), if given, is called after each accepted step.
    """
    if not corpus:
        raise ValueError("empty corpus")
    labels = mode_labels(LabelSet.from_corpus(corpus), mode)
    index = FeatureIndex()
    compiled = _compile(corpus, mode, labels, index, config.dep_features, project=True)
    index.freeze()
    if compiled.splits:
        logger.info("gold projection split %d entities into singletons", compiled.splits)
    objective = Objective(compiled, config.l2, config.workers)
    iteration = 0

    def callback(_xk) -> None:
        nonlocal iteration
        iteration += 1
        if on_iteration is not None:
            on_iteration(iteration, objective.last_value)

    try:
        result = scipy.optimize.minimize(
            objective,
            np.zeros(compiled.num_features),
            jac=True,
            method="L-BFGS-B",
            callback=callback,
            options={"maxiter": config.max_iter, "maxcor": 10, "ftol": config.ftol, "gtol": config.gtol},
        )
    finally:
        objective.close()
    logger.debug("optimizer stopped after %d iterations: %s", result.nit, result.message)
    return Model(
        mode=mode,
        labels=labels,
        index=index,
        weights=np.asarray(result.x, dtype=np.float64),
        lam=config.l2,
        dep_features=config.dep_features,
    )


def _transition_table(model: Model) -> np.ndarray:
    K = len(model.labels)
    prev_names = model.labels + (BOS,)
    trans_ids = np.full((K + 1, K), -1, dtype=np.int64)
    for p in range(K + 1):
        for y in range(K):
            fid = model.index.lookup(transition_feature(prev_names[p], model.labels[y]))
            if fid is not None:
                trans_ids[p, y] = fid
    return _transition_weights(model.weights, trans_ids)


def _sentence_scores(model: Model, sentence: Sentence, tw: np.ndarray) -> ScoredLattice:
    scheme = label_scheme(model.mode)
    lat = build_lattice(sentence, model.mode)
    mask = allowed_mask(lat, model.labels, scheme)
    spans = lat.sorted_spans()
    K = len(model.labels)
    e_sy = np.zeros((len(spans), K))
    live = mask.any(axis=1)
    for s, span in enumerate(spans):
        base = Counter(_emission_templates(sentence, span, scheme, model.dep_features))
        for y in range(K):
            if not live[s, y]:
                continue
            total = 0.0
            for template, c in base.items():
                fid = model.index.lookup(f"{template}|{model.labels[y]}")
                if fid is not None:
                    total += model.weights[fid] * c
            e_sy[s, y] = total
    scores = np.where(mask, e_sy[:, None, :] + tw[None, :, :], -np.inf)
    return ScoredLattice(lat, model.labels, scores)


def _segmentation_entities(seg: Segmentation, scheme: str) -> tuple[EntitySpan, ...]:
    if scheme == IOB_SCHEME:
        return iob_to_spans(seg.labels())[0]
    return tuple(EntitySpan(u, v, label) for (u, v), label in seg if label != "O")


def decode(model: Model, sentence: Sentence) -> tuple[EntitySpan, ...]:
    """Viterbi entity spans for one sentence."""
    seg, _ = viterbi(_sentence_scores(model, sentence, _transition_table(model)))
    return _segmentation_entities(seg, label_scheme(model.mode))


def decode_corpus(model: Model, corpus: list[Sentence]) -> list[tuple[EntitySpan, ...]]:
    tw = _transition_table(model)
    scheme = label_scheme(model.mode)
    out = []
    for sentence in corpus:
        seg, _ = viterbi(_sentence_scores(model, sentence, tw))
        out.append(_segmentation_entities(seg, scheme))
    return out


def cross_validate(corpus: list[Sentence], config: TrainConfig, mode: Mode) -> tuple[float, dict[float, float]]:
    """Pick the regularizer by k-fold span F1; ties go to the smaller value.

    Folds are contiguous chunks of a seeded shuffle, identical across
    candidate values.
    """
    from .evaluation import score

    if not config.lambda_grid:
        raise ValueError("empty lambda grid")
    if config.folds > len(corpus):
        raise ValueError(f"{config.folds} folds for {len(corpus)} sentences")
    rng = np.random.default_rng(config.seed)
    folds = np.array_split(rng.permutation(len(corpus)), config.folds)
    means: dict[float, float] = {}
    for lam in config.lambda_grid:
        cfg = replace(config, l2=lam)
        fold_f1 = []
        for k in range(config.folds):
            held = folds[k]
            train = [corpus[i] for j, fold in enumerate(folds) if j != k for i in fold]
            model = fit(train, cfg, mode)
            preds = decode_corpus(model, [corpus[i] for i in held])
            fold_f1.append(score([corpus[i].gold for i in held], preds).f1)
        means[float(lam)] = float(np.mean(fold_f1))
        logger.info("lambda %g: mean F1 %.2f", lam, means[float(lam)])
    best_f1 = max(means.values())
    best = min(lam for lam, f1 in means.items() if f1 == best_f1)
    return best, means


def bench_per_iteration(
    corpus: list[Sentence],
    mode: Mode,
    config: TrainConfig | None = None,
    iters: int = 5,
    warmup: int = 1,
) -> tuple[float, float]:
    """Mean and stddev of one objective+gradient evaluation's wall time.

    Feature extraction happens once up front and is excluded; the timed
    unit is what one optimizer iteration repeats. Warmup evaluations run
    first and are not counted.
    """
    if iters < 1:
        raise ValueError("need at least one timed iteration")
    config = config or TrainConfig()
    labels = mode_labels(LabelSet.from_corpus(corpus), mode)
    index = FeatureIndex()
    compiled = _compile(corpus, mode, labels, index, config.dep_features, project=True)
    index.freeze()
    objective = Objective(compiled, config.l2)
    w = np.zeros(compiled.num_features)
    for _ in range(max(0, warmup)):
        objective(w)
    times = []
    for _ in range(iters):
        start = time.perf_counter()
        objective(w)
        times.append(time.perf_counter() - start)
    return float(np.mean(times)), float(np.std(times))
