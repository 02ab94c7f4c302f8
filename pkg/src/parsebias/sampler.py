"""Inherent displacement distributions of transition systems.

A system's inherent distribution for sentences of length ``k`` is the law of
the displacement obtained by walking from the initial configuration choosing
uniformly among the legal transitions, finalizing, and picking one arc of the
resulting tree uniformly. For a set of sentences, lengths are drawn with their
empirical frequencies. This module estimates it by simulation and, for small
``k``, computes it exactly by expanding the branching process.
"""
from __future__ import annotations

import hashlib
import logging
import math
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .metrics import emd
from .transitions import TransitionSystem, get_system
from .treebank import DisplacementDistribution, tree_displacements

log = logging.getLogger(__name__)

MAX_ENUMERATION_LENGTH = 7


class EmptyDistribution(ValueError):
    """No walk produced a qualifying arc."""


class CapacityError(ValueError):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    repetitions: int = 10
    seed: int = 0
    include_root_arcs: bool = False
    min_bin_sentences: int = 5
    harvest_all_arcs: bool = False

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.min_bin_sentences < 0:
            raise ValueError("min_bin_sentences must be >= 0")


@dataclass(frozen=True)
class EmdEstimate:
    mean_emd: float
    std_error: float
    repetitions: int
    emds: tuple[float, ...] = ()
    distributions: tuple[DisplacementDistribution, ...] = field(default=(), repr=False, compare=False)

    @property
    def low_confidence(self) -> bool:
        return self.repetitions < 2


def derive_rng(seed: int, *key) -> random.Random:
    """Independent generator for a task identified by ``(seed, *key)``.

    The stream depends only on the identity tuple, never on scheduling order.
    """
    digest = hashlib.blake2b(repr((int(seed),) + key).encode("utf-8"), digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "little"))


def random_walk(system: str | TransitionSystem, n: int, rng: random.Random | int) -> tuple[int, ...]:
    """Finalized tree of one uniformly random transition sequence."""
    system = get_system(system)
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    c = system.initial(n)
    transitions, check, step = system.transitions, system.check, system.step
    is_terminal = system.is_terminal
    while not is_terminal(c):
        options = [t for t in transitions if check(c, t) is None]
        c = step(c, rng.choice(options))
    return system.finalize(c)


def sample_inherent_bin(system: str | TransitionSystem, lengths: Sequence[int], config: SamplerConfig,
                        repetition_index: int, treebank_id: str = "", bin_id: str = "") -> DisplacementDistribution:
    """One simulated inherent distribution for a set of sentence lengths.

    Each length gets one random walk; one displacement is drawn from the
    qualifying arcs of its tree (all of them with ``harvest_all_arcs``).
    Walks without qualifying arcs are skipped.
    """
    system = get_system(system)
    counts: Counter[int] = Counter()
    for ordinal, k in enumerate(lengths):
        rng = derive_rng(config.seed, treebank_id, bin_id, repetition_index, ordinal)
        ds = tree_displacements(random_walk(system, k, rng), config.include_root_arcs)
        if not ds:
            continue
        if config.harvest_all_arcs:
            counts.update(ds)
        else:
            counts[rng.choice(ds)] += 1
    if not counts:
        raise EmptyDistribution(
            f"{system.name}: no qualifying arcs in {len(lengths)} walks (bin {bin_id!r})")
    return DisplacementDistribution.from_counts(counts)


def estimate_emd(system: str | TransitionSystem, observed: DisplacementDistribution, lengths: Sequence[int],
                 config: SamplerConfig, treebank_id: str = "", bin_id: str = "") -> EmdEstimate | None:
    """Mean EMD between ``observed`` and repeated inherent samples.

    Returns ``None`` (and logs) when the bin has fewer than
    ``config.min_bin_sentences`` sentences.
    """
    if len(lengths) < config.min_bin_sentences:
        log.warning("skipping %s bin %s: %d sentences < %d", treebank_id, bin_id,
                    len(lengths), config.min_bin_sentences)
        return None
    dists = tuple(sample_inherent_bin(system, lengths, config, rep, treebank_id, bin_id)
                  for rep in range(1, config.repetitions + 1))
    return summarize([emd(observed, d) for d in dists], dists)


def summarize(emds: Sequence[float], distributions: Sequence[DisplacementDistribution] = ()) -> EmdEstimate:
    reps = len(emds)
    mean = math.fsum(emds) / reps
    if reps > 1:
        var = math.fsum((e - mean) ** 2 for e in emds) / (reps - 1)
        se = math.sqrt(var) / math.sqrt(reps)
    else:
        se = 0.0
    return EmdEstimate(mean, se, reps, tuple(emds), tuple(distributions))


# -- exact enumeration -------------------------------------------------------------

@dataclass(frozen=True)
class InherentEnumeration:
    distribution: DisplacementDistribution
    trees: dict[tuple[int, ...], Fraction | float]
    exact_mass: dict[int, Fraction | float]
    qualifying_probability: Fraction | float


def enumerate_inherent(system: str | TransitionSystem, n: int, include_root_arcs: bool = False,
                       harvest_all_arcs: bool = False, exact: bool = False,
                       max_n: int = MAX_ENUMERATION_LENGTH) -> InherentEnumeration:
    """Exact inherent distribution for length ``n`` by expanding every walk.

    Configurations are expanded in order of the system's progress potential,
    so each distinct configuration is visited once with its total incoming
    probability. With ``exact=True`` probabilities are
    :class:`fractions.Fraction`.
    """
    system = get_system(system)
    if n > max_n:
        raise CapacityError(f"enumeration supports n <= {max_n}, got {n}")
    one = Fraction(1) if exact else 1.0
    zero = 0 * one
    trees: dict[tuple[int, ...], Fraction | float] = defaultdict(lambda: zero)
    start = system.initial(n)
    pending: dict[int, dict] = {system.progress(start): {start: one}}
    transitions, check, step, progress = system.transitions, system.check, system.step, system.progress
    while pending:
        level = min(pending)
        for c, p in pending.pop(level).items():
            if system.is_terminal(c):
                trees[system.finalize(c)] += p
                continue
            options = [t for t in transitions if check(c, t) is None]
            share = p / len(options)
            for t in options:
                nc = step(c, t)
                bucket = pending.setdefault(progress(nc), {})
                bucket[nc] = bucket.get(nc, zero) + share

    mass: dict[int, Fraction | float] = defaultdict(lambda: zero)
    qualifying = zero
    for heads, p in trees.items():
        ds = tree_displacements(heads, include_root_arcs)
        if not ds:
            continue
        qualifying += p
        w = p if harvest_all_arcs else p / len(ds)
        for d in ds:
            mass[d] += w
    total = sum(mass.values(), zero)
    if total:
        mass = {d: m / total for d, m in sorted(mass.items())}
        dist = DisplacementDistribution({d: float(m) for d, m in mass.items()}, len(trees))
    else:
        mass = {}
        dist = DisplacementDistribution({}, 0)
    return InherentEnumeration(dist, dict(trees), mass, qualifying)
