"""Seeded synthetic treebanks for desk-scale runs.

Sentences come from a small dependency grammar (clauses with subjects,
objects, obliques, modifiers and embedded clauses). Each word-order profile
sets, per relation, the probability that the dependent precedes its head, plus
a rate of adjacent-word swaps that introduces non-projective arcs. Profiles
therefore differ in their displacement distributions, which is what the
correlation analysis needs.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .treebank import Sentence, Token, Treebank, write_conllu


@dataclass(frozen=True)
class Profile:
    name: str
    left: dict[str, float]       # P(dependent precedes head) per relation
    swap_rate: float = 0.0       # per-sentence probability of an adjacent swap
    clause_depth: float = 0.25   # probability of an embedded clause


PROFILES: dict[str, Profile] = {
    "head_initial": Profile("head_initial", {
        "nsubj": 0.9, "obj": 0.05, "obl": 0.15, "advmod": 0.5, "ccomp": 0.05,
        "det": 0.97, "amod": 0.85, "nmod": 0.05, "case": 0.97, "acl": 0.1, "punct": 0.0}, 0.05),
    "head_final": Profile("head_final", {
        "nsubj": 0.97, "obj": 0.95, "obl": 0.9, "advmod": 0.9, "ccomp": 0.9,
        "det": 0.95, "amod": 0.95, "nmod": 0.9, "case": 0.03, "acl": 0.9, "punct": 0.0}, 0.05),
    "free_order": Profile("free_order", {
        "nsubj": 0.6, "obj": 0.4, "obl": 0.5, "advmod": 0.5, "ccomp": 0.3,
        "det": 0.8, "amod": 0.5, "nmod": 0.4, "case": 0.9, "acl": 0.4, "punct": 0.0}, 0.25),
    "verb_initial": Profile("verb_initial", {
        "nsubj": 0.1, "obj": 0.05, "obl": 0.1, "advmod": 0.3, "ccomp": 0.05,
        "det": 0.9, "amod": 0.2, "nmod": 0.1, "case": 0.95, "acl": 0.05, "punct": 0.0}, 0.1),
}

_VOCAB_SIZE = {"VERB": 40, "NOUN": 80, "PRON": 8, "DET": 6, "ADJ": 40, "ADP": 10, "ADV": 20, "PUNCT": 2}


class _Node:
    __slots__ = ("upos", "rel", "children")

    def __init__(self, upos: str, rel: str):
        self.upos, self.rel, self.children = upos, rel, []


def _clause(rng: random.Random, prof: Profile, rel: str, depth: int) -> _Node:
    v = _Node("VERB", rel)
    if rng.random() < 0.9:
        v.children.append(_nominal(rng, prof, "nsubj", depth, pron=0.35))
    if rng.random() < 0.6:
        v.children.append(_nominal(rng, prof, "obj", depth, pron=0.15))
    for _ in range(rng.choice((0, 0, 1, 1, 2))):
        obl = _nominal(rng, prof, "obl", depth, pron=0.0)
        obl.children.append(_Node("ADP", "case"))
        v.children.append(obl)
    if rng.random() < 0.3:
        v.children.append(_Node("ADV", "advmod"))
    if depth < 3 and rng.random() < prof.clause_depth:
        v.children.append(_clause(rng, prof, "ccomp", depth + 1))
    return v


def _nominal(rng: random.Random, prof: Profile, rel: str, depth: int, pron: float) -> _Node:
    if rng.random() < pron:
        return _Node("PRON", rel)
    n = _Node("NOUN", rel)
    if rng.random() < 0.6:
        n.children.append(_Node("DET", "det"))
    for _ in range(rng.choice((0, 0, 0, 1, 1, 2))):
        n.children.append(_Node("ADJ", "amod"))
    if depth < 3 and rng.random() < 0.15:
        nm = _nominal(rng, prof, "nmod", depth + 1, pron=0.0)
        nm.children.append(_Node("ADP", "case"))
        n.children.append(nm)
    if depth < 2 and rng.random() < 0.06:
        n.children.append(_clause(rng, prof, "acl", depth + 1))
    return n


def _linearize(rng: random.Random, prof: Profile, node: _Node, out: list) -> None:
    """Append the subtree of ``node`` to ``out`` in projective surface order."""
    left, right = [], []
    for child in node.children:
        (left if rng.random() < prof.left[child.rel] else right).append(child)
    rng.shuffle(left)
    rng.shuffle(right)
    for child in left:
        _linearize(rng, prof, child, out)
    out.append(node)
    for child in right:
        _linearize(rng, prof, child, out)


def _word(rng: random.Random, upos: str, lang: str) -> str:
    size = _VOCAB_SIZE[upos]
    # Zipf-like choice over a per-tag vocabulary
    k = min(int(rng.paretovariate(1.1)), size) - 1
    if upos == "PUNCT":
        return "." if k == 0 else "!"
    return f"{lang}{upos.lower()}{k}"


def generate_sentence(rng: random.Random, prof: Profile, lang: str, sent_id: str) -> Sentence:
    root = _clause(rng, prof, "root", 0)
    words: list[_Node] = []
    _linearize(rng, prof, root, words)
    position = {id(n): k + 1 for k, n in enumerate(words)}
    parent = {}
    stack = [root]
    while stack:
        n = stack.pop()
        for ch in n.children:
            parent[id(ch)] = n
            stack.append(ch)
    heads = [position[id(parent[id(n)])] if id(n) in parent else 0 for n in words]
    words.append(_Node("PUNCT", "punct"))
    heads.append(position[id(root)])
    if rng.random() < prof.swap_rate and len(words) > 3:
        k = rng.randrange(len(words) - 2)
        perm = list(range(len(words)))
        perm[k], perm[k + 1] = perm[k + 1], perm[k]
        new_pos = {old: new + 1 for new, old in enumerate(perm)}
        words = [words[old] for old in perm]
        heads = [0 if heads[old] == 0 else new_pos[heads[old] - 1] for old in perm]
    tokens = tuple(Token(i, _word(rng, w.upos, lang), w.upos, h)
                   for i, (w, h) in enumerate(zip(words, heads), 1))
    return Sentence(tokens, sent_id)


def generate_treebank(name: str, profile: str | Profile, n_train: int = 1000, n_test: int = 300,
                      seed: int = 0) -> Treebank:
    prof = PROFILES[profile] if isinstance(profile, str) else profile
    rng = random.Random(f"{name}:{seed}")
    lang = "".join(part[:1] for part in name.lower().split("_"))
    train = [generate_sentence(rng, prof, lang, f"{name}-train-{k}") for k in range(n_train)]
    test = [generate_sentence(rng, prof, lang, f"{name}-test-{k}") for k in range(n_test)]
    return Treebank(name, train, test)


def write_treebank(tb: Treebank, root: str | Path) -> Path:
    directory = Path(root) / tb.name
    directory.mkdir(parents=True, exist_ok=True)
    write_conllu(directory / "train.conllu", tb.train)
    write_conllu(directory / "test.conllu", tb.test)
    return directory
