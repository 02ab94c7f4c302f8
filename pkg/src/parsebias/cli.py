"""Command-line pipeline: statistics, training sweeps, inherent sampling and reports.

Every command reads a JSON run manifest (``--manifest``) whose settings can be
overridden by flags. Outputs are CSV tables and JSON distributions under the
output directory, each written atomically.

Exit codes: 0 success, 2 validation error, 3 some (treebank, system) tasks
failed; details of the failures go to ``errors.json``.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import os
import sys
import tempfile
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import parser as parser_mod
from .metrics import (UndefinedCorrelation, corpus_uas, delta_uas, emd, pairwise_deltas, pearson,
                      pr_by_displacement, welch_t_from_summary)
from .sampler import (CapacityError, EmptyDistribution, SamplerConfig, enumerate_inherent, estimate_emd,
                      summarize)
from .transitions import NONPROJECTIVE_SYSTEMS, PROJECTIVE_SYSTEMS, SYSTEM_NAMES
from .treebank import (DEFAULT_BINS, BinSpec, DisplacementDistribution, Treebank, bin_sentences, bin_stats,
                       discover_treebanks, filter_by_size, format_conllu, label, load_treebank_files,
                       observed_distribution, read_conllu)

log = logging.getLogger("parsebias")

JOBS_ENV = "PARSEBIAS_JOBS"
ALL_BIN = "all"
EXIT_OK, EXIT_VALIDATION, EXIT_PARTIAL = 0, 2, 3

STATS_COLUMNS = ("bin", "mean", "q1", "q3")
UAS_COLUMNS = ("treebank", "system", "bin", "correct", "total", "uas", "delta_uas", "sentence_count")
EMD_COLUMNS = ("treebank", "system", "bin", "mean_emd", "std_error", "reps")
PR_COLUMNS = ("system", "displacement", "precision_mean", "precision_std", "precision_n",
              "recall_mean", "recall_std", "recall_n")
PVALUE_COLUMNS = ("system_a", "system_b", "displacement", "metric", "p_value")
CORR_COLUMNS = ("bin", "n", "r", "r_squared", "p_value", "status")
POINT_COLUMNS = ("bin", "treebank", "system", "delta_uas", "mean_emd")
REPORT_COLUMNS = ("treebank", "system", "bin", "uas", "delta_uas", "mean_emd", "emd_std_error", "sentence_count")
COMPARE_POINT_COLUMNS = ("bin", "treebank", "delta_uas", "delta_emd")

GROUPS = {"projective": PROJECTIVE_SYSTEMS, "nonprojective": NONPROJECTIVE_SYSTEMS, "all": SYSTEM_NAMES}


class ValidationError(Exception):
    pass


# -- manifest -------------------------------------------------------------------

@dataclass(frozen=True)
class TreebankRef:
    name: str
    train: Path | None
    test: Path | None


@dataclass(frozen=True)
class RunManifest:
    treebanks: tuple[TreebankRef, ...]
    systems: tuple[str, ...] = SYSTEM_NAMES
    bins: BinSpec = DEFAULT_BINS
    sampler: SamplerConfig = SamplerConfig()
    epochs: int = 5
    train_seed: int = 0
    hash_bits: int = parser_mod.DEFAULT_HASH_BITS
    out_dir: Path = Path("out")
    min_train: int = 1000
    min_test: int = 1000
    clip_displacement: int = 20
    uas_mode: str = "bin"

    def validate(self) -> None:
        if not self.systems:
            raise ValidationError("manifest lists no systems")
        for s in self.systems:
            if s not in SYSTEM_NAMES:
                raise ValidationError(f"unknown system {s!r}; choose from {', '.join(SYSTEM_NAMES)}")
        if len(set(self.systems)) != len(self.systems):
            raise ValidationError("systems listed more than once")
        names = [tb.name for tb in self.treebanks]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate treebank names")
        for tb in self.treebanks:
            for path in (tb.train, tb.test):
                if path is not None and not path.is_file():
                    raise ValidationError(f"treebank {tb.name}: {path} does not exist")
        if self.uas_mode not in ("bin", "treebank"):
            raise ValidationError("uas_mode must be 'bin' or 'treebank'")
        if self.clip_displacement < 1:
            raise ValidationError("clip_displacement must be >= 1")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")


def _resolve(base: Path, value) -> Path | None:
    if value is None:
        return None
    p = Path(value).expanduser()
    return p if p.is_absolute() else base / p


def load_manifest(path: str | os.PathLike | None) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"manifest {path} does not exist")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValidationError(f"manifest {path}: invalid JSON ({e})") from None
    if not isinstance(data, dict):
        raise ValidationError("manifest must be a JSON object")
    data["_base"] = str(path.parent.resolve())
    return data


def build_manifest(data: dict, args: argparse.Namespace) -> RunManifest:
    """Combine manifest contents with command-line overrides (flags win)."""
    base = Path(data.get("_base", "."))
    refs: list[TreebankRef] = []
    root = data.get("treebank_root")
    if root is not None:
        root_path = _resolve(base, root)
        if not root_path.is_dir():
            raise ValidationError(f"treebank_root {root_path} is not a directory")
        refs += [TreebankRef(p.name, p / "train.conllu", p / "test.conllu") for p in discover_treebanks(root_path)]
    for entry in data.get("treebanks", []):
        if isinstance(entry, str):
            entry = {"path": entry}
        if "path" in entry:
            d = _resolve(base, entry["path"])
            refs.append(TreebankRef(entry.get("name", d.name), d / "train.conllu", d / "test.conllu"))
        else:
            if "name" not in entry:
                raise ValidationError("treebank entries need a name or a path")
            refs.append(TreebankRef(entry["name"], _resolve(base, entry.get("train")),
                                    _resolve(base, entry.get("test"))))

    sampler = data.get("sampler", {})
    training = data.get("training", {})
    try:
        bins = data.get("bins")
        bins = DEFAULT_BINS if bins is None else (
            BinSpec.parse(bins) if isinstance(bins, str) else BinSpec(tuple(tuple(b) for b in bins)))
        if args.bins is not None:
            bins = BinSpec.parse(args.bins)
    except ValueError as e:
        raise ValidationError(f"bad bins: {e}") from None

    seed = args.seed if args.seed is not None else sampler.get("seed", data.get("seed", 0))
    train_seed = args.seed if args.seed is not None else training.get("seed", data.get("seed", 0))
    include_root = args.include_root_arcs or sampler.get("include_root_arcs", False)
    try:
        sconf = SamplerConfig(
            repetitions=args.reps if args.reps is not None else sampler.get("repetitions", 10),
            seed=int(seed),
            include_root_arcs=bool(include_root),
            min_bin_sentences=sampler.get("min_bin_sentences", 5),
            harvest_all_arcs=sampler.get("harvest_all_arcs", False),
        )
    except ValueError as e:
        raise ValidationError(str(e)) from None

    out_dir = args.out_dir if args.out_dir is not None else _resolve(base, data.get("out_dir", "out"))
    uas_mode = data.get("uas_mode", "bin")
    if getattr(args, "whole_treebank_uas", False):
        uas_mode = "treebank"
    m = RunManifest(
        treebanks=tuple(refs),
        systems=tuple(data.get("systems", SYSTEM_NAMES)),
        bins=bins,
        sampler=sconf,
        epochs=int(training.get("epochs", 5)),
        train_seed=int(train_seed),
        hash_bits=int(training.get("hash_bits", parser_mod.DEFAULT_HASH_BITS)),
        out_dir=Path(out_dir),
        min_train=_pick(args.min_train, data.get("min_train"), 1000),
        min_test=_pick(args.min_test, data.get("min_test"), 1000),
        clip_displacement=_pick(args.clip_displacement, data.get("clip_displacement"), 20),
        uas_mode=uas_mode,
    )
    m.validate()
    return m


def _pick(flag, value, default):
    if flag is not None:
        return flag
    return default if value is None else value


def load_treebanks(m: RunManifest) -> list[Treebank]:
    if not m.treebanks:
        raise ValidationError("no treebanks given")
    tbs = []
    for ref in m.treebanks:
        try:
            tbs.append(load_treebank_files(ref.name, ref.train, ref.test))
        except ValueError as e:
            raise ValidationError(f"treebank {ref.name}: {e}") from None
    kept = filter_by_size(tbs, m.min_train, m.min_test)
    kept_ids = {id(tb) for tb in kept}
    for tb in tbs:
        if id(tb) not in kept_ids:
            log.info("dropping %s: %d train / %d test trees below %d / %d",
                     tb.name, len(tb.train), len(tb.test), m.min_train, m.min_test)
    if not kept:
        raise ValidationError("no treebank passes the size filter")
    return kept


# -- output helpers ---------------------------------------------------------------

def atomic_write(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    atomic_write(path, buf.getvalue())


def read_csv(path: Path, columns: Sequence[str]) -> list[dict[str, str]]:
    if not path.is_file():
        raise ValidationError(f"missing input {path}; run the producing command first")
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != tuple(columns):
            raise ValidationError(f"{path}: unexpected columns {reader.fieldnames}")
        return list(reader)


def write_json(path: Path, obj) -> None:
    atomic_write(path, json.dumps(obj, indent=1) + "\n")


def dist_json(dist: DisplacementDistribution) -> dict[str, float]:
    return dist.to_json()


def report_failures(m: RunManifest, command: str, failures: list[dict]) -> int:
    path = m.out_dir / "errors.json"
    if failures:
        write_json(path, {"command": command, "failures": failures})
        log.error("%d task(s) failed; see %s", len(failures), path)
        return EXIT_PARTIAL
    if path.exists():
        path.unlink()
    return EXIT_OK


def jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        raise ValidationError(f"{JOBS_ENV} must be an integer") from None


def run_tasks(fn: Callable, tasks: Sequence[tuple]) -> list:
    """Run ``fn(*task)`` for every task; returns ``(result, error)`` pairs in task order."""
    def safe(task):
        try:
            return fn(*task), None
        except Exception as e:  # surfaced per task, the sweep continues
            return None, f"{type(e).__name__}: {e}"

    n = jobs()
    if n == 1 or len(tasks) < 2:
        return [safe(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n) as pool:
        futures = [pool.submit(fn, *t) for t in tasks]
        out = []
        for fut in futures:
            try:
                out.append((fut.result(), None))
            except Exception as e:
                out.append((None, f"{type(e).__name__}: {e}"))
        return out


def bin_labels(m: RunManifest) -> list[str]:
    return m.bins.labels + [ALL_BIN]


def binned_test(tb: Treebank, bins: BinSpec) -> dict[str, list[int]]:
    """Test-sentence indices per bin label, plus the unbinned ``all``."""
    idx, _ = bin_sentences([_Indexed(k, len(s)) for k, s in enumerate(tb.test)], bins)
    out = {label(r): [x.k for x in items] for r, items in idx.items()}
    out[ALL_BIN] = list(range(len(tb.test)))
    return out


@dataclass(frozen=True)
class _Indexed:
    k: int
    n: int

    def __len__(self):
        return self.n


# -- stats ----------------------------------------------------------------------------

def cmd_stats(m: RunManifest, args) -> int:
    tbs = load_treebanks(m)
    rows = [(s.bin, s.mean, s.q1, s.q3) for s in bin_stats(tbs, m.bins)]
    write_csv(m.out_dir / "stats.csv", STATS_COLUMNS, rows)
    log.info("wrote bin statistics for %d treebanks", len(tbs))
    return EXIT_OK


# -- train-eval ------------------------------------------------------------------------

def model_path(m: RunManifest, tb: str, system: str) -> Path:
    return m.out_dir / "models" / f"{tb}.{system}.model"


def parsed_path(m: RunManifest, tb: str, system: str) -> Path:
    return m.out_dir / "parsed" / f"{tb}.{system}.conllu"


def _train_eval_task(tb: Treebank, system: str, epochs: int, seed: int, hash_bits: int,
                     mpath: Path, ppath: Path) -> list[tuple[int, ...]]:
    model = parser_mod.train(system, tb.train, epochs=epochs, seed=seed, hash_bits=hash_bits)
    mpath.parent.mkdir(parents=True, exist_ok=True)
    parser_mod.save_model(model, mpath)
    predicted = [parser_mod.parse(model, s) for s in tb.test]
    atomic_write(ppath, format_conllu(tb.test, predicted))
    return predicted


def uas_rows(tbs: Sequence[Treebank], predictions: dict[tuple[str, str], list], m: RunManifest) -> list[tuple]:
    rows = []
    for tb in tbs:
        for blabel, members in binned_test(tb, m.bins).items():
            if not members:
                continue
            gold = [tb.test[k].heads for k in members]
            scores = {}
            for system in m.systems:
                pred = predictions.get((tb.name, system))
                if pred is not None:
                    scores[system] = corpus_uas([pred[k] for k in members], gold)
            deltas = delta_uas({s: sc.percent for s, sc in scores.items()}) if len(scores) >= 2 else {}
            for system, sc in scores.items():
                rows.append((tb.name, system, blabel, sc.correct, sc.total, sc.percent,
                             deltas.get(system), len(members)))
    return rows


def cmd_train_eval(m: RunManifest, args) -> int:
    tbs = load_treebanks(m)
    tasks = [(tb, s, m.epochs, m.train_seed, m.hash_bits, model_path(m, tb.name, s), parsed_path(m, tb.name, s))
             for tb in tbs for s in m.systems]
    predictions, failures = {}, []
    for task, (result, err) in zip(tasks, run_tasks(_train_eval_task, tasks)):
        key = (task[0].name, task[1])
        if err is None:
            predictions[key] = result
        else:
            log.error("train-eval failed for %s/%s: %s", *key, err)
            failures.append({"treebank": key[0], "system": key[1], "error": err})
    write_csv(m.out_dir / "uas.csv", UAS_COLUMNS, uas_rows(tbs, predictions, m))
    return report_failures(m, "train-eval", failures)


# -- displacement-report ---------------------------------------------------------------

def _mean_std(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    mean = math.fsum(values) / len(values)
    if len(values) < 2:
        return mean, None
    return mean, float(np.std(values, ddof=1))


def cmd_displacement_report(m: RunManifest, args) -> int:
    tbs = load_treebanks(m)
    missing = [str(parsed_path(m, tb.name, s)) for tb in tbs for s in m.systems
               if not parsed_path(m, tb.name, s).is_file()]
    if missing:
        raise ValidationError("missing parsed outputs (run train-eval first): " + ", ".join(missing))

    clip = m.clip_displacement
    ds = [d for d in range(-clip, clip + 1) if d != 0]
    # per system, d, metric: values across treebanks (undefined cells excluded)
    values: dict[tuple[str, int, str], list[float]] = defaultdict(list)
    for tb in tbs:
        gold = [s.heads for s in tb.test]
        for system in m.systems:
            pred_sents = read_conllu(parsed_path(m, tb.name, system), on_invalid="abort")
            pred = [s.heads for s in pred_sents]
            if [len(p) for p in pred] != [len(g) for g in gold]:
                raise ValidationError(f"{parsed_path(m, tb.name, system)} is not aligned with the {tb.name} test set")
            pr = pr_by_displacement(pred, gold, m.sampler.include_root_arcs)
            for d in ds:
                for metric in ("precision", "recall"):
                    v = getattr(pr, metric)(d)
                    if v is not None:
                        values[(system, d, metric)].append(v)

    summary = {}
    rows = []
    for system in m.systems:
        for d in ds:
            row = [system, d]
            for metric in ("precision", "recall"):
                vals = values.get((system, d, metric), [])
                mean, std = _mean_std(vals)
                summary[(system, d, metric)] = (mean, std, len(vals))
                row += [mean, std, len(vals)]
            rows.append(row)
    write_csv(m.out_dir / "displacement_pr.csv", PR_COLUMNS, rows)

    prows = []
    for a, b in itertools.combinations(m.systems, 2):
        for d in ds:
            for metric in ("precision", "recall"):
                m1, s1, n1 = summary[(a, d, metric)]
                m2, s2, n2 = summary[(b, d, metric)]
                if n1 < 2 or n2 < 2:
                    continue
                prows.append((a, b, d, metric, welch_t_from_summary(m1, s1, n1, m2, s2, n2)))
    write_csv(m.out_dir / "displacement_pvalues.csv", PVALUE_COLUMNS, prows)
    return EXIT_OK


# -- inherent ----------------------------------------------------------------------------

def _inherent_task(tb_name: str, system: str, bins: dict[str, tuple[list[int], DisplacementDistribution]],
                   config: SamplerConfig, self_test: bool) -> dict[str, object]:
    out: dict[str, object] = {}
    for blabel, (lengths, observed) in bins.items():
        if observed.empty:
            out[blabel] = "no qualifying observed arcs"
            continue
        if self_test:
            if len(lengths) < config.min_bin_sentences:
                out[blabel] = f"{len(lengths)} sentences < {config.min_bin_sentences}"
                continue
            dists = (observed,) * config.repetitions
            out[blabel] = summarize([emd(observed, d) for d in dists], dists)
            continue
        try:
            est = estimate_emd(system, observed, lengths, config, tb_name, blabel)
        except EmptyDistribution as e:
            out[blabel] = str(e)
            continue
        out[blabel] = est if est is not None else f"{len(lengths)} sentences < {config.min_bin_sentences}"
    return out


def inherent_dir(m: RunManifest, tb: str, blabel: str) -> Path:
    return m.out_dir / "inherent" / tb / blabel


def cmd_inherent(m: RunManifest, args) -> int:
    tbs = load_treebanks(m)
    config = m.sampler
    tasks = []
    for tb in tbs:
        per_bin = {}
        for blabel, members in binned_test(tb, m.bins).items():
            if not members:
                continue
            sents = [tb.test[k] for k in members]
            observed = observed_distribution(sents, config.include_root_arcs)
            per_bin[blabel] = ([len(s) for s in sents], observed)
            if not observed.empty:
                write_json(inherent_dir(m, tb.name, blabel) / "observed.json", dist_json(observed))
        for system in m.systems:
            tasks.append((tb.name, system, per_bin, config, bool(getattr(args, "self_test", False))))

    self_test = bool(getattr(args, "self_test", False))
    rows, failures = [], []
    for task, (result, err) in zip(tasks, run_tasks(_inherent_task, tasks)):
        tb_name, system = task[0], task[1]
        if err is not None:
            log.error("inherent failed for %s/%s: %s", tb_name, system, err)
            failures.append({"treebank": tb_name, "system": system, "error": err})
            continue
        for blabel, est in result.items():
            if isinstance(est, str):
                log.info("skipped %s/%s bin %s: %s", tb_name, system, blabel, est)
                continue
            for k, dist in enumerate(() if self_test else est.distributions, 1):
                write_json(inherent_dir(m, tb_name, blabel) / f"{system}.rep{k:02d}.json", dist_json(dist))
            rows.append((tb_name, system, blabel, est.mean_emd, est.std_error, est.repetitions))
    order = {b: k for k, b in enumerate(bin_labels(m))}
    rows.sort(key=lambda r: (r[0], order[r[2]], m.systems.index(r[1])))
    # the self-test never overwrites real estimates
    write_csv(m.out_dir / ("emd_selftest.csv" if self_test else "emd.csv"), EMD_COLUMNS, rows)
    return report_failures(m, "inherent", failures)


# -- correlate / compare ------------------------------------------------------------------

def _load_tables(m: RunManifest):
    uas_tab = {(r["treebank"], r["system"], r["bin"]): r for r in read_csv(m.out_dir / "uas.csv", UAS_COLUMNS)}
    emd_tab = {(r["treebank"], r["system"], r["bin"]): r for r in read_csv(m.out_dir / "emd.csv", EMD_COLUMNS)}
    treebanks = sorted({k[0] for k in uas_tab} | {k[0] for k in emd_tab})
    return uas_tab, emd_tab, treebanks


def _uas_for(uas_tab, m: RunManifest, tb: str, system: str, blabel: str):
    key = (tb, system, ALL_BIN if m.uas_mode == "treebank" else blabel)
    row = uas_tab.get(key)
    return None if row is None else float(row["uas"])


def _correlation_row(blabel: str, xs: list[float], ys: list[float]) -> tuple:
    if len(xs) < 3:
        log.warning("bin %s: %d points, need at least 3", blabel, len(xs))
        return (blabel, len(xs), None, None, None, "too_few_points")
    try:
        res = pearson(xs, ys)
    except UndefinedCorrelation as e:
        log.warning("bin %s: %s", blabel, e)
        return (blabel, len(xs), None, None, None, "undefined")
    return (blabel, res.n, res.r, res.r_squared, res.p_value, "ok")


def correlate(m: RunManifest, group: str) -> tuple[list, list, list]:
    """Per-bin Pearson correlation of δUAS against mean EMD pooled over treebanks."""
    systems = [s for s in m.systems if s in GROUPS[group]]
    if not systems:
        raise ValidationError(f"no {group} systems in the manifest")
    if len(systems) < 2:
        raise ValidationError(f"the {group} group needs at least two systems, got {systems}")
    uas_tab, emd_tab, treebanks = _load_tables(m)
    corr, points, report = [], [], []
    for blabel in bin_labels(m):
        xs, ys = [], []
        for tb in treebanks:
            uas_vals = {s: _uas_for(uas_tab, m, tb, s, blabel) for s in systems}
            emd_rows = {s: emd_tab.get((tb, s, blabel)) for s in systems}
            if any(v is None for v in uas_vals.values()) or any(r is None for r in emd_rows.values()):
                continue
            deltas = delta_uas(uas_vals)
            count_row = uas_tab.get((tb, systems[0], blabel))
            count = int(count_row["sentence_count"]) if count_row else None
            for s in systems:
                e = float(emd_rows[s]["mean_emd"])
                xs.append(deltas[s])
                ys.append(e)
                points.append((blabel, tb, s, deltas[s], e))
                report.append((tb, s, blabel, uas_vals[s], deltas[s], e,
                               float(emd_rows[s]["std_error"]), count))
        corr.append(_correlation_row(blabel, xs, ys))
    return corr, points, report


def cmd_correlate(m: RunManifest, args) -> int:
    group = args.group
    corr, points, report = correlate(m, group)
    write_csv(m.out_dir / f"correlate_{group}.csv", CORR_COLUMNS, corr)
    write_csv(m.out_dir / f"correlate_{group}_points.csv", POINT_COLUMNS, points)
    write_csv(m.out_dir / f"bin_report_{group}.csv", REPORT_COLUMNS, report)
    for row in corr:
        if row[-1] == "ok":
            log.info("%s bin %s: n=%d r=%.3f p=%.3g", group, row[0], row[1], row[2], row[4])
    return EXIT_OK


def compare(m: RunManifest, a1: str, a2: str) -> tuple[list, list]:
    """Per-bin correlation of ΔUAS against ΔEMD for two named systems, one point per treebank."""
    if a1 == a2:
        raise ValidationError("compare needs two different systems")
    for a in (a1, a2):
        if a not in SYSTEM_NAMES:
            raise ValidationError(f"unknown system {a!r}")
    uas_tab, emd_tab, treebanks = _load_tables(m)
    corr, points = [], []
    for blabel in bin_labels(m):
        xs, ys = [], []
        for tb in treebanks:
            u = {a: _uas_for(uas_tab, m, tb, a, blabel) for a in (a1, a2)}
            e = {a: emd_tab.get((tb, a, blabel)) for a in (a1, a2)}
            if any(v is None for v in u.values()) or any(v is None for v in e.values()):
                continue
            du, de = pairwise_deltas(u, {a: float(r["mean_emd"]) for a, r in e.items()}, a1, a2)
            xs.append(du)
            ys.append(de)
            points.append((blabel, tb, du, de))
        corr.append(_correlation_row(blabel, xs, ys))
    return corr, points


def cmd_compare(m: RunManifest, args) -> int:
    corr, points = compare(m, args.a1, args.a2)
    stem = f"compare_{args.a1}_{args.a2}"
    write_csv(m.out_dir / f"{stem}.csv", CORR_COLUMNS, corr)
    write_csv(m.out_dir / f"{stem}_points.csv", COMPARE_POINT_COLUMNS, points)
    return EXIT_OK


# -- enumerate ----------------------------------------------------------------------------

def _prob(p) -> float | str:
    return f"{p.numerator}/{p.denominator}" if isinstance(p, Fraction) else p


def cmd_enumerate(args) -> int:
    try:
        res = enumerate_inherent(args.system, args.n, include_root_arcs=args.include_root_arcs,
                                 harvest_all_arcs=args.harvest_all_arcs, exact=args.exact)
    except (CapacityError, ValueError, KeyError) as e:
        raise ValidationError(str(e)) from None
    out = {
        "system": args.system,
        "n": args.n,
        "include_root_arcs": args.include_root_arcs,
        "distribution": {str(d): _prob(p) for d, p in res.exact_mass.items()},
        "qualifying_probability": _prob(res.qualifying_probability),
        "trees": [{"heads": list(h), "probability": _prob(p)} for h, p in sorted(res.trees.items())],
    }
    text = json.dumps(out, indent=1) + "\n"
    if args.out_dir is not None:
        atomic_write(Path(args.out_dir) / f"enumerate_{args.system}_n{args.n}.json", text)
    sys.stdout.write(text)
    return EXIT_OK


# -- entry point ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run settings (override the manifest)")
    g.add_argument("--manifest", help="JSON run manifest")
    g.add_argument("--seed", type=int, help="seed for sampling and training")
    g.add_argument("--bins", help='sentence-length bins, e.g. "1-3,4-6,7-9"')
    g.add_argument("--include-root-arcs", action="store_true", default=False,
                   help="count arcs headed by the artificial root")
    g.add_argument("--reps", type=int, help="inherent-sampling repetitions")
    g.add_argument("--out-dir", type=Path, help="output directory")
    g.add_argument("--min-train", type=int, help="minimum training trees per treebank")
    g.add_argument("--min-test", type=int, help="minimum test trees per treebank")
    g.add_argument("--clip-displacement", type=int, help="largest |d| in precision/recall tables")
    g.add_argument("-q", "--quiet", action="store_true", help="only log warnings and errors")

    ap = argparse.ArgumentParser(prog="parsebias", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("stats", parents=[common], help="per-bin test tree counts across treebanks")
    sub.add_parser("train-eval", parents=[common], help="train and evaluate every system on every treebank")
    sub.add_parser("displacement-report", parents=[common],
                   help="precision/recall per displacement and pairwise Welch p-values")
    p = sub.add_parser("inherent", parents=[common], help="sample inherent distributions and mean EMDs")
    p.add_argument("--self-test", action="store_true",
                   help="use the observed distribution as the sampled one (mean EMD must be 0)")
    p = sub.add_parser("correlate", parents=[common], help="per-bin correlation of δUAS with mean EMD")
    p.add_argument("--group", choices=sorted(GROUPS), default="projective")
    p.add_argument("--whole-treebank-uas", action="store_true",
                   help="use whole-treebank UAS instead of bin-restricted UAS")
    p = sub.add_parser("compare", parents=[common], help="per-bin correlation of ΔUAS with ΔEMD for two systems")
    p.add_argument("a1", choices=SYSTEM_NAMES)
    p.add_argument("a2", choices=SYSTEM_NAMES)
    p.add_argument("--whole-treebank-uas", action="store_true",
                   help="use whole-treebank UAS instead of bin-restricted UAS")
    p = sub.add_parser("enumerate", parents=[common], help="exact inherent distribution for small n")
    p.add_argument("--system", required=True, choices=SYSTEM_NAMES)
    p.add_argument("-n", "--n", type=int, required=True, help="sentence length (<= 7)")
    p.add_argument("--exact", action="store_true", help="rational probabilities")
    p.add_argument("--harvest-all-arcs", action="store_true", help="weight every arc instead of one per walk")
    return ap


COMMANDS = {
    "stats": cmd_stats,
    "train-eval": cmd_train_eval,
    "displacement-report": cmd_displacement_report,
    "inherent": cmd_inherent,
    "correlate": cmd_correlate,
    "compare": cmd_compare,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.command == "enumerate":
            return cmd_enumerate(args)
        m = build_manifest(load_manifest(args.manifest), args)
        return COMMANDS[args.command](m, args)
    except ValidationError as e:
        log.error("%s", e)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
