"""Synthetic annotated corpora over uniformly random dependency trees.

Sentence lengths are Poisson, trees come from random Pruefer sequences and
are oriented by a BFS from a random root, and entities are planted on
spans whose endpoints share a tree arc, so they stay representable in
every lattice mode (leak_rate plants a fraction on arbitrary spans
instead). vocab = 0 gives every token a globally unique surface form,
which makes the corpus linearly separable: each entity token then has a
witness feature of its own.
"""

from __future__ import annotations

import numpy as np

from .corpus import DependencyTree, EntitySpan, Sentence, Token
from .combinatorics import random_tree

_RELATIONS = ("nsubj", "obj", "nmod", "amod", "conj", "dep")
_FILLER_POS = ("NN", "VB", "DT", "IN", "JJ")


def _orient(n: int, edges, rng) -> list[int]:
    """Heads array from undirected edges: BFS out of a random root."""
    adj: dict[int, list[int]] = {i: [] for i in range(1, n + 1)}
    for a, b in sorted(edges):
        adj[a].append(b)
        adj[b].append(a)
    root = int(rng.integers(1, n + 1))
    heads = [0] * (n + 1)
    seen = {root}
    queue = [root]
    while queue:
        node = queue.pop(0)
        for nxt in adj[node]:
            if nxt not in seen:
                seen.add(nxt)
                heads[nxt] = node
                queue.append(nxt)
    return heads[1:]


def synthesize(
    num_sentences: int,
    mean_len: float = 25.0,
    num_types: int = 4,
    vocab: int = 200,
    entity_rate: float = 0.15,
    leak_rate: float = 0.0,
    max_len: int = 8,
    seed: int = 42,
) -> list[Sentence]:
    """Generate num_sentences annotated sentences (deterministic per seed)."""
    if num_sentences < 1 or num_types < 1:
        raise ValueError("need at least one sentence and one entity type")
    if not 0.0 <= leak_rate <= 1.0 or not 0.0 <= entity_rate <= 1.0:
        raise ValueError("rates must lie in [0, 1]")
    if mean_len <= 0 or max_len < 1:
        raise ValueError("mean_len and max_len must be positive")
    rng = np.random.default_rng(seed)
    types = [f"T{k}" for k in range(1, num_types + 1)]
    unique = 0
    sentences = []
    for _ in range(num_sentences):
        n = max(1, int(rng.poisson(mean_len)))
        tree = random_tree(n, rng)
        heads = _orient(n, tree.edges, rng)
        relations = tuple(
            "root" if h == 0 else _RELATIONS[int(rng.integers(len(_RELATIONS)))] for h in heads
        )
        arcs = sorted((min(a, b), max(a, b)) for a, b in tree.edges)
        target = int(round(entity_rate * n))
        taken = [False] * (n + 2)
        entities = []
        for _ in range(4 * n):
            if sum(v - u + 1 for u, v, _t in entities) >= target:
                break
            if leak_rate and rng.random() < leak_rate:
                u = int(rng.integers(1, n + 1))
                v = min(n, u + int(rng.integers(max_len)))
            else:
                if rng.random() < 0.3 or not arcs:
                    u = v = int(rng.integers(1, n + 1))
                else:
                    u, v = arcs[int(rng.integers(len(arcs)))]
            if v - u + 1 > max_len or any(taken[u : v + 1]):
                continue
            for i in range(u, v + 1):
                taken[i] = True
            entities.append((u, v, types[int(rng.integers(len(types)))]))
        entities.sort()
        etype_at = {}
        for u, v, t in entities:
            for i in range(u, v + 1):
                etype_at[i] = t
        tokens = []
        for i in range(1, n + 1):
            if i in etype_at:
                stem = etype_at[i].lower()
                pos = "NNP"
            else:
                stem = "w"
                pos = _FILLER_POS[int(rng.integers(len(_FILLER_POS)))]
            if vocab:
                surface = f"{stem}{int(rng.integers(vocab))}"
            else:
                unique += 1
                surface = f"{stem}u{unique}"
            tokens.append(Token(surface, pos))
        sentences.append(
            Sentence(
                tuple(tokens),
                DependencyTree(tuple(heads), relations),
                tuple(EntitySpan(u, v, t) for u, v, t in entities),
            )
        )
    return sentences
