"""CoNLL-U ingestion, sentence-length bins and displacement distributions."""
from __future__ import annotations

import io
import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Mapping, Sequence

import numpy as np

from .metrics import displacement
from .transitions import tree_error

log = logging.getLogger(__name__)

ID, FORM, LEMMA, UPOS, XPOS, FEATS, HEAD, DEPREL, DEPS, MISC = range(10)


class ConlluError(ValueError):
    """Malformed CoNLL-U input; ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Token:
    index: int
    form: str
    upos: str
    gold_head: int

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"token index must be >= 1, got {self.index}")
        if self.gold_head == self.index:
            raise ValueError(f"token {self.index} is its own head")


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for k, tok in enumerate(self.tokens, 1):
            if tok.index != k:
                raise ValueError(f"sentence {self.id!r}: token indices must run 1..n")
        reason = tree_error(self.heads) if self.tokens else "empty sentence"
        if reason is not None:
            raise ValueError(f"sentence {self.id!r}: {reason}")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def heads(self) -> tuple[int, ...]:
        return tuple(t.gold_head for t in self.tokens)

    @property
    def forms(self) -> tuple[str, ...]:
        return tuple(t.form for t in self.tokens)

    @property
    def upos(self) -> tuple[str, ...]:
        return tuple(t.upos for t in self.tokens)

    @classmethod
    def from_heads(cls, heads: Sequence[int], forms: Sequence[str] | None = None,
                   upos: Sequence[str] | None = None, id: str = "") -> "Sentence":
        n = len(heads)
        forms = forms or [f"w{i}" for i in range(1, n + 1)]
        upos = upos or ["X"] * n
        return cls(tuple(Token(i, f, u, h) for i, (f, u, h) in enumerate(zip(forms, upos, heads), 1)), id)


@dataclass
class Treebank:
    name: str
    train: list[Sentence] = field(default_factory=list)
    test: list[Sentence] = field(default_factory=list)

    def __post_init__(self):
        if not self.name:
            raise ValueError("treebank name must be nonempty")


# -- CoNLL-U ----------------------------------------------------------------------

def _parse_int(value: str, what: str, lineno: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConlluError(f"malformed {what} field {value!r}", lineno) from None


def parse_conllu(stream: BinaryIO | bytes | str, on_invalid: str = "reject") -> list[Sentence]:
    """Read sentences from UTF-8 CoNLL-U.

    Multiword-token ranges (``3-4``) and empty nodes (``3.1``) are skipped.
    Malformed ID or HEAD fields raise :class:`ConlluError`. Sentences whose
    heads do not form a tree are dropped with a warning when ``on_invalid`` is
    ``"reject"`` and raise when it is ``"abort"``.
    """
    if on_invalid not in ("reject", "abort"):
        raise ValueError(f"on_invalid must be 'reject' or 'abort', got {on_invalid!r}")
    if isinstance(stream, bytes):
        stream = io.BytesIO(stream)
    if isinstance(stream, str):
        text = io.StringIO(stream)
    else:
        text = io.TextIOWrapper(stream, encoding="utf-8", newline="")

    sentences: list[Sentence] = []
    rows: list[tuple[int, list[str]]] = []
    sent_id: str | None = None
    start_line = 1

    def flush():
        nonlocal rows, sent_id
        if rows:
            sid = sent_id if sent_id is not None else str(len(sentences) + 1)
            _finish(sentences, rows, sid, start_line, on_invalid)
        rows, sent_id = [], None

    lineno = 0
    for lineno, line in enumerate(text, 1):
        line = line.rstrip("\r\n")
        if not line.strip():
            flush()
            continue
        if not rows and sent_id is None:
            start_line = lineno
        if line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if sep and key.strip() == "sent_id":
                sent_id = value.strip()
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluError(f"expected 10 tab-separated columns, found {len(cols)}", lineno)
        tid = cols[ID]
        if "-" in tid or "." in tid:
            for part in tid.replace("-", ".").split("."):
                _parse_int(part, "ID", lineno)
            continue
        rows.append((lineno, cols))
    flush()
    if isinstance(text, io.TextIOWrapper):
        text.detach()
    return sentences


def _finish(out: list[Sentence], rows, sid: str, start_line: int, on_invalid: str) -> None:
    tokens = []
    n = len(rows)
    for k, (lineno, cols) in enumerate(rows, 1):
        index = _parse_int(cols[ID], "ID", lineno)
        if index != k:
            raise ConlluError(f"word ID {index} out of sequence (expected {k})", lineno)
        head = _parse_int(cols[HEAD], "HEAD", lineno)
        tokens.append((index, cols[FORM], cols[UPOS], head))
    heads = [t[3] for t in tokens]
    reason = tree_error(heads) if n else "empty sentence"
    if reason is not None:
        msg = f"sentence {sid!r} (line {start_line}) rejected: {reason}"
        if on_invalid == "abort":
            raise ConlluError(msg, start_line)
        log.warning(msg)
        return
    out.append(Sentence(tuple(Token(*t) for t in tokens), sid))


def read_conllu(path: str | os.PathLike, on_invalid: str = "reject") -> list[Sentence]:
    with open(path, "rb") as f:
        return parse_conllu(f, on_invalid=on_invalid)


def format_conllu(sentences: Iterable[Sentence], heads: Iterable[Sequence[int]] | None = None) -> str:
    """Serialize the retained columns; ``heads`` overrides the gold heads (e.g. parser output)."""
    lines = []
    heads_iter = iter(heads) if heads is not None else None
    for sent in sentences:
        hs = next(heads_iter) if heads_iter is not None else sent.heads
        if sent.id:
            lines.append(f"# sent_id = {sent.id}")
        for tok, h in zip(sent.tokens, hs, strict=True):
            lines.append(f"{tok.index}\t{tok.form}\t_\t{tok.upos}\t_\t_\t{h}\t_\t_\t_")
        lines.append("")
    return "\n".join(lines) + ("\n" if lines else "")


def write_conllu(path: str | os.PathLike, sentences: Iterable[Sentence],
                 heads: Iterable[Sequence[int]] | None = None) -> None:
    Path(path).write_text(format_conllu(sentences, heads), encoding="utf-8")


def load_treebank(directory: str | os.PathLike, name: str | None = None,
                  on_invalid: str = "reject") -> Treebank:
    """Load ``<directory>/train.conllu`` and ``<directory>/test.conllu``."""
    directory = Path(directory)
    return load_treebank_files(name or directory.name, directory / "train.conllu",
                               directory / "test.conllu", on_invalid)


def load_treebank_files(name: str, train: str | os.PathLike | None, test: str | os.PathLike | None,
                        on_invalid: str = "reject") -> Treebank:
    return Treebank(
        name,
        read_conllu(train, on_invalid) if train else [],
        read_conllu(test, on_invalid) if test else [],
    )


def discover_treebanks(root: str | os.PathLike) -> list[Path]:
    """Subdirectories of ``root`` holding both ``train.conllu`` and ``test.conllu``."""
    root = Path(root)
    return sorted(p for p in root.iterdir()
                  if p.is_dir() and (p / "train.conllu").is_file() and (p / "test.conllu").is_file())


def filter_by_size(treebanks: Iterable[Treebank], min_train: int = 1000, min_test: int = 1000) -> list[Treebank]:
    if min_train < 0 or min_test < 0:
        raise ValueError("size thresholds must be nonnegative")
    return [tb for tb in treebanks if len(tb.train) >= min_train and len(tb.test) >= min_test]


# -- bins -------------------------------------------------------------------------

@dataclass(frozen=True)
class BinSpec:
    ranges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        ranges = tuple((int(lo), int(hi)) for lo, hi in self.ranges)
        object.__setattr__(self, "ranges", ranges)
        prev = None
        for lo, hi in ranges:
            if lo > hi:
                raise ValueError(f"empty bin {lo}-{hi}")
            if prev is not None and lo <= prev:
                raise ValueError("bins must be disjoint and ascending")
            prev = hi

    @classmethod
    def parse(cls, text: str) -> "BinSpec":
        """Parse ``"1-3,4-6,..."``."""
        ranges = []
        for part in text.split(","):
            lo, sep, hi = part.strip().partition("-")
            if not sep:
                raise ValueError(f"bin {part!r} is not of the form lo-hi")
            ranges.append((int(lo), int(hi)))
        return cls(tuple(ranges))

    @property
    def labels(self) -> list[str]:
        return [label(r) for r in self.ranges]

    def find(self, length: int) -> tuple[int, int] | None:
        for lo, hi in self.ranges:
            if lo <= length <= hi:
                return (lo, hi)
        return None

    def __str__(self) -> str:
        return ",".join(self.labels)


DEFAULT_BINS = BinSpec(((1, 3), (4, 6), (7, 9), (10, 12), (13, 15), (16, 18), (19, 21),
                        (22, 24), (25, 27), (28, 33), (34, 39), (40, 99)))


def label(bin_range: tuple[int, int]) -> str:
    return f"{bin_range[0]}-{bin_range[1]}"


def bin_sentences(sentences: Iterable, bins: BinSpec = DEFAULT_BINS) -> tuple[dict[tuple[int, int], list], int]:
    """Group items by ``len(item)``; returns the bins and the count dropped."""
    out: dict[tuple[int, int], list] = {r: [] for r in bins.ranges}
    dropped = 0
    for s in sentences:
        r = bins.find(len(s))
        if r is None:
            dropped += 1
        else:
            out[r].append(s)
    return out, dropped


@dataclass(frozen=True)
class BinStat:
    bin: str
    mean: float
    q1: float
    q3: float


def bin_stats(treebanks: Sequence[Treebank], bins: BinSpec = DEFAULT_BINS) -> list[BinStat]:
    """Mean and quartiles across treebanks of the number of test trees per bin."""
    if not treebanks:
        raise ValueError("bin statistics need at least one treebank")
    counts = np.zeros((len(treebanks), len(bins.ranges)))
    for i, tb in enumerate(treebanks):
        binned, _ = bin_sentences(tb.test, bins)
        counts[i] = [len(binned[r]) for r in bins.ranges]
    q1, q3 = np.percentile(counts, [25, 75], axis=0)
    return [BinStat(label(r), float(counts[:, k].mean()), float(q1[k]), float(q3[k]))
            for k, r in enumerate(bins.ranges)]


# -- displacement distributions --------------------------------------------------

@dataclass(frozen=True)
class DisplacementDistribution:
    mass: Mapping[int, float]
    support_count: int = 0

    def __post_init__(self):
        mass = {int(d): float(p) for d, p in sorted(self.mass.items())}
        if 0 in mass:
            raise ValueError("displacement 0 cannot occur")
        if any(p < 0 for p in mass.values()):
            raise ValueError("negative probability")
        if mass and abs(sum(mass.values()) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {sum(mass.values())}, not 1")
        object.__setattr__(self, "mass", mass)

    @classmethod
    def from_counts(cls, counts: Mapping[int, int]) -> "DisplacementDistribution":
        total = sum(counts.values())
        if total == 0:
            return cls({}, 0)
        return cls({d: c / total for d, c in counts.items() if c}, total)

    @property
    def empty(self) -> bool:
        return not self.mass

    def mean(self) -> float:
        return sum(d * p for d, p in self.mass.items())

    def to_json(self) -> dict[str, float]:
        return {str(d): p for d, p in self.mass.items()}

    @classmethod
    def from_json(cls, data: Mapping[str, float], support_count: int = 0) -> "DisplacementDistribution":
        return cls({int(d): p for d, p in data.items()}, support_count)


def tree_displacements(heads: Sequence[int], include_root_arcs: bool = False) -> list[int]:
    return [displacement(h, d) for d, h in enumerate(heads, 1) if include_root_arcs or h != 0]


def distribution_from_trees(trees: Iterable[Sequence[int]], include_root_arcs: bool = False) -> DisplacementDistribution:
    counts: Counter[int] = Counter()
    for heads in trees:
        counts.update(tree_displacements(heads, include_root_arcs))
    return DisplacementDistribution.from_counts(counts)


def observed_distribution(sentences: Iterable[Sentence], include_root_arcs: bool = False) -> DisplacementDistribution:
    """One sample per gold arc; root arcs count with the root at position 0."""
    return distribution_from_trees((s.heads for s in sentences), include_root_arcs)
