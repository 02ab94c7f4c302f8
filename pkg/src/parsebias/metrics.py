"""Displacement, earth mover's distance, attachment scores and the statistics
used to relate them (Welch t-tests, Pearson correlation).

The t-distribution tail is evaluated through the regularized incomplete beta
function with a Lentz continued fraction, so no statistics package is needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


def displacement(head_pos: int, dep_pos: int) -> int:
    """Signed head-minus-dependent offset: negative for rightward arcs."""
    if head_pos == dep_pos:
        raise ValueError(f"head and dependent share position {head_pos}")
    return head_pos - dep_pos


# -- earth mover's distance ----------------------------------------------------

def _mass(dist) -> Mapping[int, float]:
    mass = getattr(dist, "mass", dist)
    if not mass:
        raise ValueError("EMD of an empty distribution is undefined")
    return mass


def emd(p, q) -> float:
    """Wasserstein-1 distance between two distributions on the integer line.

    Accepts :class:`~parsebias.treebank.DisplacementDistribution` objects or
    plain ``{displacement: probability}`` mappings. With unit ground distance
    this is the sum over the integer grid of the absolute CDF difference.
    """
    pm, qm = _mass(p), _mass(q)
    support = sorted(set(pm) | set(qm))
    total = 0.0
    cdf_gap = 0.0
    for d, nxt in zip(support, support[1:]):
        cdf_gap += pm.get(d, 0.0) - qm.get(d, 0.0)
        total += abs(cdf_gap) * (nxt - d)
    return total


# -- attachment scores -----------------------------------------------------------

@dataclass(frozen=True)
class UasScore:
    correct: int
    total: int

    def __post_init__(self):
        if self.total <= 0:
            raise ValueError("UAS over zero tokens is undefined")

    @property
    def uas(self) -> float:
        return self.correct / self.total

    @property
    def percent(self) -> float:
        return 100.0 * self.correct / self.total

    def __add__(self, other: "UasScore") -> "UasScore":
        return UasScore(self.correct + other.correct, self.total + other.total)


def uas(predicted: Sequence[int], gold: Sequence[int]) -> UasScore:
    if len(predicted) != len(gold):
        raise ValueError(f"length mismatch: {len(predicted)} predicted vs {len(gold)} gold heads")
    correct = sum(p == g for p, g in zip(predicted, gold))
    return UasScore(correct, len(gold))


def corpus_uas(predicted: Iterable[Sequence[int]], gold: Iterable[Sequence[int]]) -> UasScore:
    correct = total = 0
    for p, g in zip(predicted, gold, strict=True):
        s = uas(p, g)
        correct += s.correct
        total += s.total
    return UasScore(correct, total)


def delta_uas(scores: Mapping[str, float]) -> dict[str, float]:
    """Each algorithm's score minus the mean over the compared algorithms."""
    if len(scores) < 2:
        raise ValueError("delta UAS needs at least two algorithms")
    mean = math.fsum(scores.values()) / len(scores)
    return {alg: s - mean for alg, s in scores.items()}


def pairwise_deltas(uas_by_alg: Mapping[str, float], emd_by_alg: Mapping[str, float],
                    a1: str, a2: str) -> tuple[float, float]:
    """(UAS difference, mean-EMD difference) of ``a1`` relative to ``a2``."""
    for alg in (a1, a2):
        if alg not in uas_by_alg or alg not in emd_by_alg:
            raise KeyError(f"algorithm {alg!r} missing from scores")
    return uas_by_alg[a1] - uas_by_alg[a2], emd_by_alg[a1] - emd_by_alg[a2]


# -- precision / recall per displacement -----------------------------------------

@dataclass
class PRCell:
    predicted: int = 0
    gold: int = 0
    correct: int = 0

    @property
    def precision(self) -> float | None:
        return self.correct / self.predicted if self.predicted else None

    @property
    def recall(self) -> float | None:
        return self.correct / self.gold if self.gold else None


@dataclass
class DisplacementPR:
    cells: dict[int, PRCell] = field(default_factory=dict)

    def __getitem__(self, d: int) -> PRCell:
        return self.cells[d]

    def __contains__(self, d: int) -> bool:
        return d in self.cells

    def displacements(self) -> list[int]:
        return sorted(self.cells)

    def precision(self, d: int) -> float | None:
        cell = self.cells.get(d)
        return cell.precision if cell else None

    def recall(self, d: int) -> float | None:
        cell = self.cells.get(d)
        return cell.recall if cell else None


def pr_by_displacement(predicted: Sequence[Sequence[int]], gold: Sequence[Sequence[int]],
                       include_root_arcs: bool = False) -> DisplacementPR:
    """Attachment precision and recall bucketed by arc displacement.

    ``predicted`` and ``gold`` are aligned lists of heads tuples. Undefined
    cells (zero denominators) report ``None``.
    """
    if len(predicted) != len(gold):
        raise ValueError(f"{len(predicted)} predicted trees vs {len(gold)} gold trees")
    out = DisplacementPR()
    cells = out.cells
    for k, (ptree, gtree) in enumerate(zip(predicted, gold)):
        if len(ptree) != len(gtree):
            raise ValueError(f"tree {k}: {len(ptree)} predicted vs {len(gtree)} gold words")
        for dep, (ph, gh) in enumerate(zip(ptree, gtree), 1):
            if include_root_arcs or ph != 0:
                cell = cells.setdefault(displacement(ph, dep), PRCell())
                cell.predicted += 1
                if ph == gh:
                    cell.correct += 1
            if include_root_arcs or gh != 0:
                cells.setdefault(displacement(gh, dep), PRCell()).gold += 1
    return out


# -- special functions -----------------------------------------------------------

_TINY = 1e-300


def _betacf(a: float, b: float, x: float, rtol: float = 1e-12, max_iter: int = 10000) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < rtol:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("betainc needs a > 0 and b > 0")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0
    return min(1.0, betainc(df / 2.0, 0.5, df / (df + t * t)))


# -- tests --------------------------------------------------------------------------

def welch_t_from_summary(m1: float, s1: float, n1: int, m2: float, s2: float, n2: int) -> float:
    """Two-sided p-value of Welch's t-test from means, standard deviations and sizes."""
    if n1 < 2 or n2 < 2:
        raise ValueError("Welch's test needs at least two observations per group")
    if s1 < 0 or s2 < 0:
        raise ValueError("standard deviations must be nonnegative")
    v1, v2 = s1 * s1 / n1, s2 * s2 / n2
    se2 = v1 + v2
    if se2 == 0.0:
        return 1.0 if m1 == m2 else 0.0
    t = (m1 - m2) / math.sqrt(se2)
    df = se2 * se2 / (v1 * v1 / (n1 - 1) + v2 * v2 / (n2 - 1))
    return t_two_sided_p(t, df)


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    p_value: float
    n: int

    @property
    def r_squared(self) -> float:
        return self.r * self.r


class UndefinedCorrelation(ValueError):
    pass


def pearson(xs: Sequence[float], ys: Sequence[float]) -> CorrelationResult:
    """Product-moment correlation with the two-sided t-test p-value (n - 2 df)."""
    n = len(xs)
    if n != len(ys):
        raise ValueError(f"length mismatch: {n} vs {len(ys)}")
    if n < 3:
        raise ValueError("Pearson correlation needs at least 3 points")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(a * a for a in dx)
    syy = math.fsum(b * b for b in dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelation("correlation undefined for a constant series")
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    r = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    if abs(r) == 1.0:
        return CorrelationResult(r, 0.0, n)
    df = n - 2
    t = r * math.sqrt(df / ((1.0 - r) * (1.0 + r)))
    return CorrelationResult(r, t_two_sided_p(t, df), n)
