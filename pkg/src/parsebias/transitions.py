"""Transition systems for dependency parsing as pure state machines.

Five systems are provided: Arc-Standard, Arc-Eager, projective and
non-projective Covington, and Swap-Eager (Arc-Standard plus SWAP). Nodes are
integers; 0 is the artificial root placed before the first word.

A tree over ``n`` words is represented as a tuple ``heads`` of length ``n``
where ``heads[i - 1]`` is the head of word ``i``.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

NO_HEAD = -1


class Transition(enum.Enum):
    SHIFT = "SHIFT"
    LEFT_ARC = "LEFT_ARC"
    RIGHT_ARC = "RIGHT_ARC"
    REDUCE = "REDUCE"
    NO_ARC = "NO_ARC"
    SWAP = "SWAP"

    def __repr__(self) -> str:
        return self.value


SHIFT = Transition.SHIFT
LEFT_ARC = Transition.LEFT_ARC
RIGHT_ARC = Transition.RIGHT_ARC
REDUCE = Transition.REDUCE
NO_ARC = Transition.NO_ARC
SWAP = Transition.SWAP


class IllegalTransition(ValueError):
    pass


class TerminalConfiguration(ValueError):
    pass


@dataclass(frozen=True)
class Arc:
    head: int
    dependent: int

    def __post_init__(self):
        if self.head == self.dependent:
            raise ValueError(f"self-loop on node {self.head}")
        if self.dependent < 1 or self.head < 0:
            raise ValueError(f"invalid arc {self.head} -> {self.dependent}")


@dataclass(frozen=True, slots=True)
class Configuration:
    """Parser state.

    ``stack`` is the stack for the stack-based systems and the list lambda1
    for Covington (its last element is the node compared with the buffer
    front). ``passed`` is Covington's lambda2, the nodes already compared with
    the current buffer front, kept in surface order. ``heads`` has length
    ``n + 1``; ``heads[0]`` belongs to the root and is always ``NO_HEAD``.
    """

    stack: tuple[int, ...]
    buffer: tuple[int, ...]
    heads: tuple[int, ...]
    passed: tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return len(self.heads) - 1

    @property
    def lambda1(self) -> tuple[int, ...]:
        return self.stack

    @property
    def lambda2(self) -> tuple[int, ...]:
        return self.passed

    @property
    def arcs(self) -> frozenset[Arc]:
        return frozenset(
            Arc(h, d) for d, h in enumerate(self.heads) if d > 0 and h != NO_HEAD
        )

    def has_head(self, node: int) -> bool:
        return self.heads[node] != NO_HEAD


def _set_head(heads: tuple[int, ...], dep: int, head: int) -> tuple[int, ...]:
    return heads[:dep] + (head,) + heads[dep + 1:]


def _is_ancestor(heads: Sequence[int], anc: int, node: int) -> bool:
    """True when ``anc`` lies on the head path from ``node`` (inclusive)."""
    while node != NO_HEAD:
        if node == anc:
            return True
        node = heads[node]
    return False


class TransitionSystem:
    """Base class; subclasses define the transition set and its semantics."""

    name: str = ""
    projective: bool = True
    transitions: tuple[Transition, ...] = ()

    def initial(self, n: int) -> Configuration:
        if n < 1:
            raise ValueError(f"sentence length must be >= 1, got {n}")
        return Configuration(
            stack=(0,), buffer=tuple(range(1, n + 1)), heads=(NO_HEAD,) * (n + 1)
        )

    def check(self, c: Configuration, t: Transition) -> str | None:
        """Return ``None`` when ``t`` is legal in ``c``, else the violated condition."""
        raise NotImplementedError

    def legal(self, c: Configuration) -> list[Transition]:
        if self.is_terminal(c):
            raise TerminalConfiguration(f"{self.name}: configuration is terminal")
        return [t for t in self.transitions if self.check(c, t) is None]

    def apply(self, c: Configuration, t: Transition) -> Configuration:
        if t not in self.transitions:
            raise IllegalTransition(f"{t.value} is not a {self.name} transition")
        if self.is_terminal(c):
            raise IllegalTransition(f"{self.name}: configuration is terminal")
        reason = self.check(c, t)
        if reason is not None:
            raise IllegalTransition(f"{self.name}: {t.value} illegal: {reason}")
        return self.step(c, t)

    def step(self, c: Configuration, t: Transition) -> Configuration:
        """Apply ``t`` without checking its preconditions."""
        raise NotImplementedError

    def is_terminal(self, c: Configuration) -> bool:
        return not c.buffer

    def finalize(self, c: Configuration) -> tuple[int, ...]:
        if not self.is_terminal(c):
            raise ValueError(f"{self.name}: finalize on a non-terminal configuration")
        return tuple(0 if h == NO_HEAD else h for h in c.heads[1:])

    def max_steps(self, n: int) -> int:
        raise NotImplementedError

    def progress(self, c: Configuration) -> int:
        """Integer potential that strictly increases with every transition."""
        return 2 * (c.n - len(c.buffer)) - len(c.stack)

    def index(self, t: Transition) -> int:
        return self.transitions.index(t)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class ArcStandard(TransitionSystem):
    name = "arc_standard"
    projective = True
    transitions = (SHIFT, LEFT_ARC, RIGHT_ARC)

    def check(self, c, t):
        stack = c.stack
        if t is SHIFT:
            return None if c.buffer else "buffer is empty"
        if len(stack) < 2:
            return "stack holds fewer than two nodes"
        if t is LEFT_ARC:
            return "second stack node is the root" if stack[-2] == 0 else None
        if t is RIGHT_ARC:
            return None
        return f"unknown transition {t}"

    def step(self, c, t):
        stack = c.stack
        if t is SHIFT:
            return Configuration(stack + c.buffer[:1], c.buffer[1:], c.heads)
        s0, s1 = stack[-1], stack[-2]
        if t is LEFT_ARC:
            return Configuration(stack[:-2] + (s0,), c.buffer, _set_head(c.heads, s1, s0))
        return Configuration(stack[:-1], c.buffer, _set_head(c.heads, s0, s1))

    def is_terminal(self, c):
        return not c.buffer and len(c.stack) <= 2

    def max_steps(self, n):
        return 2 * n - 1


class SwapEager(ArcStandard):
    name = "swap_eager"
    projective = False
    transitions = (SHIFT, LEFT_ARC, RIGHT_ARC, SWAP)

    def check(self, c, t):
        if t is SWAP:
            stack = c.stack
            if len(stack) < 2:
                return "stack holds fewer than two nodes"
            if not 0 < stack[-2] < stack[-1]:
                return "second stack node does not precede the top in surface order"
            return None
        return super().check(c, t)

    def step(self, c, t):
        if t is SWAP:
            stack = c.stack
            return Configuration(stack[:-2] + stack[-1:], stack[-2:-1] + c.buffer, c.heads)
        return super().step(c, t)

    def max_steps(self, n):
        pairs = n * (n - 1) // 2
        # every SWAP forces one extra SHIFT
        return n + 2 * pairs + (n - 1)

    def progress(self, c):
        # SWAP adds one inversion to the stack+buffer order; an arc removes a
        # node (and at most n - 1 inversions) but adds a head
        order = c.stack[1:] + c.buffer
        inversions = sum(a > b for k, a in enumerate(order) for b in order[k + 1:])
        attached = sum(h != NO_HEAD for h in c.heads)
        return 2 * c.n * attached + 2 * inversions + super().progress(c)


class ArcEager(TransitionSystem):
    name = "arc_eager"
    projective = True
    transitions = (SHIFT, LEFT_ARC, RIGHT_ARC, REDUCE)

    def check(self, c, t):
        s0 = c.stack[-1]
        if t is SHIFT:
            return None if c.buffer else "buffer is empty"
        if t is LEFT_ARC:
            if not c.buffer:
                return "buffer is empty"
            if s0 == 0:
                return "stack top is the root"
            if c.heads[s0] != NO_HEAD:
                return "stack top already has a head"
            return None
        if t is RIGHT_ARC:
            return None if c.buffer else "buffer is empty"
        if t is REDUCE:
            if s0 == 0:
                return "stack top is the root"
            if c.heads[s0] == NO_HEAD:
                return "stack top has no head"
            return None
        return f"unknown transition {t}"

    def step(self, c, t):
        stack, buffer = c.stack, c.buffer
        if t is SHIFT:
            return Configuration(stack + buffer[:1], buffer[1:], c.heads)
        if t is LEFT_ARC:
            return Configuration(stack[:-1], buffer, _set_head(c.heads, stack[-1], buffer[0]))
        if t is RIGHT_ARC:
            b0 = buffer[0]
            return Configuration(stack + (b0,), buffer[1:], _set_head(c.heads, b0, stack[-1]))
        return Configuration(stack[:-1], buffer, c.heads)

    def max_steps(self, n):
        return 2 * n


class CovingtonNonProjective(TransitionSystem):
    name = "covington_np"
    projective = False
    transitions = (SHIFT, LEFT_ARC, RIGHT_ARC, NO_ARC)

    def initial(self, n):
        c = super().initial(n)
        return Configuration(stack=(0,), buffer=c.buffer, heads=c.heads, passed=())

    def link_permitted(self, heads: Sequence[int], head: int, dep: int) -> str | None:
        if dep == 0:
            return "dependent would be the root"
        if heads[dep] != NO_HEAD:
            return "dependent already has a head"
        if _is_ancestor(heads, dep, head):
            return "arc would create a cycle"
        return None

    def check(self, c, t):
        if t is SHIFT:
            return None if c.buffer else "buffer is empty"
        if not c.stack:
            return "lambda1 is empty"
        if t is NO_ARC:
            return None
        if not c.buffer:
            return "buffer is empty"
        i, j = c.stack[-1], c.buffer[0]
        if t is LEFT_ARC:
            return self.link_permitted(c.heads, j, i)
        if t is RIGHT_ARC:
            return self.link_permitted(c.heads, i, j)
        return f"unknown transition {t}"

    def step(self, c, t):
        stack, passed, buffer = c.stack, c.passed, c.buffer
        if t is SHIFT:
            return Configuration(stack + passed + buffer[:1], buffer[1:], c.heads, ())
        i = stack[-1]
        heads = c.heads
        if t is LEFT_ARC:
            heads = _set_head(heads, i, buffer[0])
        elif t is RIGHT_ARC:
            heads = _set_head(heads, buffer[0], i)
        return Configuration(stack[:-1], buffer, heads, (i,) + passed)

    def max_steps(self, n):
        return n * (n + 1) // 2 + n

    def progress(self, c):
        return (c.n - len(c.buffer)) * (c.n + 2) + len(c.passed)


class CovingtonProjective(CovingtonNonProjective):
    name = "covington_proj"
    projective = True

    def link_permitted(self, heads, head, dep):
        reason = super().link_permitted(heads, head, dep)
        if reason is not None:
            return reason
        left, right = (head, dep) if head < dep else (dep, head)
        for d in range(1, len(heads)):
            h = heads[d]
            if h == NO_HEAD:
                if left < d < right and left > 0:
                    return f"covered node {d} is unattached"
                continue
            a, b = (h, d) if h < d else (d, h)
            if a < left < b < right or left < a < right < b:
                return f"arc would cross {h} -> {d}"
        return None


SYSTEMS: dict[str, TransitionSystem] = {
    s.name: s
    for s in (ArcStandard(), ArcEager(), CovingtonProjective(), CovingtonNonProjective(), SwapEager())
}
SYSTEM_NAMES = tuple(SYSTEMS)
PROJECTIVE_SYSTEMS = tuple(name for name, s in SYSTEMS.items() if s.projective)
NONPROJECTIVE_SYSTEMS = tuple(name for name, s in SYSTEMS.items() if not s.projective)


def get_system(system: str | TransitionSystem) -> TransitionSystem:
    if isinstance(system, TransitionSystem):
        return system
    try:
        return SYSTEMS[system]
    except KeyError:
        raise ValueError(f"unknown transition system {system!r}; expected one of {SYSTEM_NAMES}") from None


def initial_configuration(system, n: int) -> Configuration:
    return get_system(system).initial(n)


def legal_transitions(system, c: Configuration) -> list[Transition]:
    return get_system(system).legal(c)


def apply(system, c: Configuration, t: Transition) -> Configuration:
    return get_system(system).apply(c, t)


def is_terminal(system, c: Configuration) -> bool:
    return get_system(system).is_terminal(c)


def finalize(system, c: Configuration) -> tuple[int, ...]:
    return get_system(system).finalize(c)


def run(system, n: int, transitions: Iterable[Transition]) -> tuple[int, ...]:
    """Replay a transition sequence from the initial configuration and finalize."""
    system = get_system(system)
    c = system.initial(n)
    for t in transitions:
        c = system.apply(c, t)
    return system.finalize(c)


# -- tree utilities -----------------------------------------------------------

def tree_error(heads: Sequence[int]) -> str | None:
    """Describe why ``heads`` is not a 0-rooted tree, or return ``None``."""
    n = len(heads)
    if n == 0:
        return "empty tree"
    for i, h in enumerate(heads, 1):
        if not 0 <= h <= n:
            return f"head {h} of word {i} out of range 0..{n}"
        if h == i:
            return f"word {i} is its own head"
    state = [0] * (n + 1)  # 0 unvisited, 1 on path, 2 reaches root
    state[0] = 2
    for start in range(1, n + 1):
        path = []
        node = start
        while state[node] == 0:
            state[node] = 1
            path.append(node)
            node = heads[node - 1]
        if state[node] == 1:
            return f"cycle through word {node}"
        for p in path:
            state[p] = 2
    return None


def check_tree(heads: Sequence[int]) -> None:
    reason = tree_error(heads)
    if reason is not None:
        raise ValueError(f"not a tree: {reason}")


def is_projective(heads: Sequence[int]) -> bool:
    """True iff no two arcs cross when drawn above the sentence, root at 0."""
    check_tree(heads)
    spans = [(h, d) if h < d else (d, h) for d, h in enumerate(heads, 1)]
    for a, b in spans:
        for c, d in spans:
            if a < c < b < d:
                return False
    return True


def arcs_of(heads: Sequence[int]) -> list[tuple[int, int]]:
    """(head, dependent) pairs of a heads tuple."""
    return [(h, d) for d, h in enumerate(heads, 1)]


def all_trees(n: int) -> Iterable[tuple[int, ...]]:
    """Every 0-rooted tree over ``n`` words, (n + 1) ** (n - 1) in total."""
    for heads in itertools.product(range(n + 1), repeat=n):
        if tree_error(heads) is None:
            yield heads


def projectivize(heads: Sequence[int]) -> tuple[int, ...]:
    """Lift non-projective arcs to the grandparent until the tree is projective.

    The shortest non-projective arc is lifted first (ties: leftmost dependent),
    which keeps the number of changed attachments small.
    """
    heads = list(heads)
    check_tree(heads)
    while True:
        worst = None
        for d, h in enumerate(heads, 1):
            if h == 0:
                continue
            lo, hi = (h, d) if h < d else (d, h)
            for k in range(lo + 1, hi):
                if not _dominates(heads, h, k):
                    key = (hi - lo, d)
                    if worst is None or key < worst:
                        worst = key
                    break
        if worst is None:
            return tuple(heads)
        d = worst[1]
        heads[d - 1] = heads[heads[d - 1] - 1]


def _dominates(heads: Sequence[int], anc: int, node: int) -> bool:
    while node != 0:
        if node == anc:
            return True
        node = heads[node - 1]
    return anc == 0
