"""Greedy transition-based parser: static oracles, a fixed feature template set
and an averaged perceptron over hashed features.

The same templates are used for every treebank and system so that accuracy
differences between systems come from the transition systems themselves.

Feature templates (version 1). ``s0 s1 s2`` are the top three stack nodes
(for Covington: the last three nodes of lambda1), ``b0 b1 b2`` the first three
buffer nodes. ``.f`` is FORM, ``.p`` is UPOS; the root has FORM and UPOS
``<ROOT>`` and missing positions give ``<NULL>``::

    bias
    s0.f s0.p s1.f s1.p s2.f s2.p
    b0.f b0.p b1.f b1.p b2.f b2.p
    s0.lp s0.rp b0.lp b0.rp      UPOS of leftmost / rightmost attached dependent
    s0.nd                        number of dependents attached to s0
    s0.p|b0.p  s0.f|b0.p  s0.p|b0.f  s0.p|b0.p|b1.p
    dist                         |s0 - b0| bucketed as 1 2 3 4 5+

Each feature string ``"<template>=<value>"`` is mapped to a row of the weight
table by the first 8 bytes (little-endian) of its BLAKE2b digest modulo
``2 ** hash_bits``.
"""
from __future__ import annotations

import functools
import hashlib
import json
import random
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .transitions import (
    LEFT_ARC, NO_ARC, NO_HEAD, REDUCE, RIGHT_ARC, SHIFT, SWAP,
    Configuration, Transition, TransitionSystem, get_system, is_projective, projectivize,
)
from .treebank import Sentence

TEMPLATE_VERSION = 1
DEFAULT_HASH_BITS = 18
ROOT = "<ROOT>"
NULL = "<NULL>"


# -- static oracles ---------------------------------------------------------------

def oracle_target(system: str | TransitionSystem, heads: Sequence[int]) -> tuple[int, ...]:
    """The tree the oracle steers towards.

    Projective systems cannot build a non-projective gold tree; they aim at its
    lifted projective approximation instead.
    """
    system = get_system(system)
    heads = tuple(heads)
    if system.projective and not is_projective(heads):
        return projectivize(heads)
    return heads


def _projective_order(tgt: Sequence[int]) -> list[int]:
    """Position of every node (root included) in the in-order traversal."""
    n = len(tgt) - 1
    children: list[list[int]] = [[] for _ in range(n + 1)]
    for d in range(1, n + 1):
        children[tgt[d]].append(d)
    order = [0] * (n + 1)
    pos = 0
    todo: list[tuple[int, bool]] = [(0, False)]
    while todo:
        node, expanded = todo.pop()
        if expanded:
            order[node] = pos
            pos += 1
            continue
        left = [c for c in children[node] if c < node]
        right = [c for c in children[node] if c > node]
        todo.extend((c, False) for c in reversed(right))
        todo.append((node, True))
        todo.extend((c, False) for c in reversed(left))
    return order


class _Oracle:
    """Root attachments are left to finalize wherever the system allows it."""

    def __init__(self, system: TransitionSystem, heads: Sequence[int]):
        self.system = system
        target = oracle_target(system, heads)
        self.tgt = (NO_HEAD,) + target
        n = len(target)
        self.children: list[list[int]] = [[] for _ in range(n + 1)]
        for d in range(1, n + 1):
            self.children[self.tgt[d]].append(d)
        self.order = _projective_order(self.tgt) if system.name == "swap_eager" else None

    def complete(self, c: Configuration, node: int) -> bool:
        return all(c.heads[d] == node for d in self.children[node])

    def propose(self, c: Configuration) -> Transition:
        name = self.system.name
        tgt, stack, buffer = self.tgt, c.stack, c.buffer
        if name in ("arc_standard", "swap_eager"):
            if len(stack) >= 2:
                s0, s1 = stack[-1], stack[-2]
                if s1 != 0 and tgt[s1] == s0 and self.complete(c, s1):
                    return LEFT_ARC
                if tgt[s0] == s1 and self.complete(c, s0):
                    return RIGHT_ARC
                if self.order is not None and s1 != 0 and self.order[s0] < self.order[s1]:
                    return SWAP
            return SHIFT
        if name == "arc_eager":
            s0, b0 = stack[-1], buffer[0]
            if s0 != 0 and tgt[s0] == b0 and c.heads[s0] == NO_HEAD:
                return LEFT_ARC
            if s0 != 0 and tgt[b0] == s0:
                return RIGHT_ARC
            if s0 != 0 and c.heads[s0] != NO_HEAD and any(
                    tgt[k] == b0 or tgt[b0] == k for k in stack[:-1]):
                return REDUCE
            return SHIFT
        # Covington
        j = buffer[0]
        if stack:
            i = stack[-1]
            if i != 0 and tgt[i] == j and self.system.check(c, LEFT_ARC) is None:
                return LEFT_ARC
            if i != 0 and tgt[j] == i and self.system.check(c, RIGHT_ARC) is None:
                return RIGHT_ARC
            j_open = c.heads[j] == NO_HEAD
            if any((tgt[k] == j and c.heads[k] == NO_HEAD) or (j_open and k != 0 and tgt[j] == k) for k in stack):
                return NO_ARC
        return SHIFT

    def next(self, c: Configuration) -> Transition:
        t = self.propose(c)
        if self.system.check(c, t) is not None:
            t = self.system.legal(c)[0]
        return t


def oracle_derivation(system: str | TransitionSystem, heads: Sequence[int]) -> list[tuple[Configuration, Transition]]:
    """(configuration, transition) pairs of the static oracle's derivation."""
    system = get_system(system)
    oracle = _Oracle(system, heads)
    c = system.initial(len(heads))
    out = []
    while not system.is_terminal(c):
        t = oracle.next(c)
        out.append((c, t))
        c = system.step(c, t)
    return out


def static_oracle(system: str | TransitionSystem, sentence: Sentence | Sequence[int]) -> list[Transition]:
    """Canonical transition sequence for a gold tree (finalize completes it)."""
    heads = sentence.heads if isinstance(sentence, Sentence) else sentence
    return [t for _, t in oracle_derivation(system, heads)]


# -- features ---------------------------------------------------------------------

@functools.lru_cache(maxsize=1 << 20)
def feature_hash(feature: str) -> int:
    return int.from_bytes(hashlib.blake2b(feature.encode("utf-8"), digest_size=8).digest(), "little")


def _bucket(d: int) -> str:
    return str(d) if d < 5 else "5+"


def extract_features(c: Configuration, sentence: Sentence) -> list[str]:
    """Feature strings of a configuration; see the module docstring."""
    forms = (ROOT,) + sentence.forms
    tags = (ROOT,) + sentence.upos
    heads = c.heads
    stack, buffer = c.stack, c.buffer

    def at(seq, k):
        return seq[-1 - k] if len(seq) > k else None

    s = [at(stack, k) for k in range(3)]
    b = [buffer[k] if len(buffer) > k else None for k in range(3)]
    f = [forms[x] if x is not None else NULL for x in s + b]
    p = [tags[x] if x is not None else NULL for x in s + b]

    def edge_tags(node):
        if node is None:
            return NULL, NULL, 0
        deps = [d for d in range(1, len(heads)) if heads[d] == node]
        if not deps:
            return NULL, NULL, 0
        return tags[deps[0]], tags[deps[-1]], len(deps)

    s0l, s0r, s0n = edge_tags(s[0])
    b0l, b0r, _ = edge_tags(b[0])
    dist = _bucket(abs(s[0] - b[0])) if s[0] is not None and b[0] is not None else NULL
    return [
        "bias",
        f"s0.f={f[0]}", f"s0.p={p[0]}", f"s1.f={f[1]}", f"s1.p={p[1]}", f"s2.f={f[2]}", f"s2.p={p[2]}",
        f"b0.f={f[3]}", f"b0.p={p[3]}", f"b1.f={f[4]}", f"b1.p={p[4]}", f"b2.f={f[5]}", f"b2.p={p[5]}",
        f"s0.lp={s0l}", f"s0.rp={s0r}", f"b0.lp={b0l}", f"b0.rp={b0r}",
        f"s0.nd={s0n}",
        f"s0.p|b0.p={p[0]}|{p[3]}", f"s0.f|b0.p={f[0]}|{p[3]}", f"s0.p|b0.f={p[0]}|{f[3]}",
        f"s0.p|b0.p|b1.p={p[0]}|{p[3]}|{p[4]}",
        f"dist={dist}",
    ]


def feature_rows(c: Configuration, sentence: Sentence, hash_bits: int = DEFAULT_HASH_BITS) -> np.ndarray:
    mask = (1 << hash_bits) - 1
    return np.fromiter((feature_hash(x) & mask for x in extract_features(c, sentence)), dtype=np.intp)


# -- model --------------------------------------------------------------------------

@dataclass(eq=False)
class Model:
    system: str
    weights: np.ndarray
    averaged: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n_t = len(get_system(self.system).transitions)
        if self.weights.ndim != 2 or self.weights.shape[1] != n_t:
            raise ValueError(f"weights must have shape (rows, {n_t}) for {self.system}")

    @property
    def hash_bits(self) -> int:
        return int(self.weights.shape[0]).bit_length() - 1

    def __eq__(self, other):
        if not isinstance(other, Model):
            return NotImplemented
        return (self.system == other.system and self.averaged == other.averaged
                and self.meta == other.meta and self.weights.shape == other.weights.shape
                and bool(np.array_equal(self.weights, other.weights)))


def train(system: str | TransitionSystem, sentences: Sequence[Sentence], epochs: int = 5, seed: int = 0,
          hash_bits: int = DEFAULT_HASH_BITS) -> Model:
    """Averaged perceptron trained on static-oracle derivations.

    The oracle path is followed regardless of the prediction, so each
    sentence's feature rows are extracted once and reused across epochs.
    """
    system = get_system(system)
    if not sentences:
        raise ValueError("cannot train on an empty training set")
    index = {t: k for k, t in enumerate(system.transitions)}
    instances = []
    for sent in sentences:
        steps = []
        for c, t in oracle_derivation(system, sent.heads):
            legal = [index[x] for x in system.legal(c)]
            steps.append((feature_rows(c, sent, hash_bits), legal, index[t]))
        instances.append(steps)

    shape = (1 << hash_bits, len(system.transitions))
    w = np.zeros(shape)
    acc = np.zeros(shape)  # sum of (timestamp * update), for lazy averaging
    clock = 1
    rng = random.Random(seed)
    order = list(range(len(instances)))
    for _ in range(epochs):
        rng.shuffle(order)
        for k in order:
            for rows, legal, gold in instances[k]:
                scores = w[rows].sum(axis=0)
                pred = legal[0]
                for t in legal[1:]:
                    if scores[t] > scores[pred]:
                        pred = t
                if pred != gold:
                    np.add.at(w, (rows, gold), 1.0)
                    np.add.at(w, (rows, pred), -1.0)
                    np.add.at(acc, (rows, gold), clock)
                    np.add.at(acc, (rows, pred), -clock)
                clock += 1
    weights = w - acc / clock
    meta = {"seed": seed, "epochs": epochs, "template_version": TEMPLATE_VERSION,
            "train_sentences": len(sentences)}
    return Model(system.name, weights, True, meta)


def parse(model: Model, sentence: Sentence, system: str | None = None) -> tuple[int, ...]:
    """Greedy decoding: best-scoring legal transition until terminal, then finalize."""
    if system is not None and get_system(system).name != model.system:
        raise ValueError(f"model was trained for {model.system}, not {get_system(system).name}")
    sys_ = get_system(model.system)
    index = {t: k for k, t in enumerate(sys_.transitions)}
    bits = model.hash_bits
    c = sys_.initial(len(sentence))
    while not sys_.is_terminal(c):
        legal = sys_.legal(c)
        scores = model.weights[feature_rows(c, sentence, bits)].sum(axis=0)
        best = legal[0]
        for t in legal[1:]:
            if scores[index[t]] > scores[index[best]]:
                best = t
        c = sys_.step(c, best)
    return sys_.finalize(c)


# -- persistence ----------------------------------------------------------------------

MAGIC = b"PBMODEL\x00"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sHI")  # magic, format version, metadata length


class ModelFormatError(ValueError):
    pass


def save_model(model: Model, path: str | Path) -> None:
    """Little-endian container: header, JSON metadata, sparse rows, CRC32."""
    meta = json.dumps({
        "system": model.system,
        "averaged": model.averaged,
        "meta": model.meta,
        "shape": list(model.weights.shape),
        "transitions": [t.value for t in get_system(model.system).transitions],
    }, sort_keys=True).encode("utf-8")
    rows = np.flatnonzero(np.any(model.weights != 0, axis=1)).astype("<u4")
    body = (struct.pack("<Q", len(rows)) + rows.tobytes()
            + model.weights[rows].astype("<f8").tobytes())
    payload = _HEADER.pack(MAGIC, FORMAT_VERSION, len(meta)) + meta + body
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload + struct.pack("<I", zlib.crc32(payload)))
    tmp.replace(path)


def load_model(path: str | Path) -> Model:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size + 4:
        raise ModelFormatError("model file truncated")
    magic, version, meta_len = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ModelFormatError("not a model file (bad magic bytes)")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    payload, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(payload) != crc:
        raise ModelFormatError("model file corrupted or truncated (checksum mismatch)")
    pos = _HEADER.size
    info = json.loads(data[pos:pos + meta_len].decode("utf-8"))
    pos += meta_len
    (n_rows,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    shape = tuple(info["shape"])
    rows = np.frombuffer(data, dtype="<u4", count=n_rows, offset=pos).astype(np.intp)
    pos += 4 * n_rows
    values = np.frombuffer(data, dtype="<f8", count=n_rows * shape[1], offset=pos).reshape(n_rows, shape[1])
    system = get_system(info["system"])
    if info["transitions"] != [t.value for t in system.transitions]:
        raise ModelFormatError(f"transition inventory does not match {system.name}")
    weights = np.zeros(shape)
    weights[rows] = values
    return Model(info["system"], weights, info["averaged"], info["meta"])
