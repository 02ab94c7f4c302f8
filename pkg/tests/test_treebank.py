import io
import logging

import pytest
from hypothesis import given, settings, strategies as st

from parsebias.transitions import all_trees
from parsebias.treebank import (DEFAULT_BINS, BinSpec, ConlluError, DisplacementDistribution, Sentence, Token,
                                Treebank, bin_sentences, bin_stats, discover_treebanks, filter_by_size,
                                format_conllu, load_treebank, observed_distribution, parse_conllu,
                                write_conllu)

MINIMAL = "1\tHe\the\tPRON\t_\t_\t2\tnsubj\t_\t_\n2\truns\trun\tVERB\t_\t_\t0\troot\t_\t_\n\n"


def row(i, form, head, upos="X"):
    return f"{i}\t{form}\t_\t{upos}\t_\t_\t{head}\t_\t_\t_"


def test_parse_minimal():
    (s,) = parse_conllu(MINIMAL.encode())
    assert len(s) == 2 and s.heads == (2, 0)
    assert s.forms == ("He", "runs") and s.upos == ("PRON", "VERB")


def test_parse_accepts_stream_and_text():
    assert parse_conllu(io.BytesIO(MINIMAL.encode()))[0].heads == (2, 0)
    assert parse_conllu(MINIMAL)[0].heads == (2, 0)


def test_multiword_and_empty_nodes_skipped():
    text = "\n".join([
        "# sent_id = s1",
        row(1, "I", 2),
        row(2, "do", 0),
        "3-4\tdon't\t_\t_\t_\t_\t_\t_\t_\t_",
        row(3, "do", 2),
        row(4, "n't", 3),
        "4.1\tgap\t_\tX\t_\t_\t_\t_\t_\t_",
        "",
    ])
    (s,) = parse_conllu(text)
    assert s.id == "s1"
    assert [t.index for t in s.tokens] == [1, 2, 3, 4]
    assert s.forms[2:] == ("do", "n't")


def test_cycle_rejected_by_default(caplog):
    bad = "\n".join([row(1, "a", 2), row(2, "b", 1), ""])
    good = MINIMAL
    with caplog.at_level(logging.WARNING):
        out = parse_conllu(bad + "\n" + good)
    assert [s.heads for s in out] == [(2, 0)]
    assert any("cycle" in r.getMessage() or "reject" in r.getMessage() for r in caplog.records)


def test_abort_mode_raises():
    bad = "\n".join([row(1, "a", 2), row(2, "b", 1), ""])
    with pytest.raises(ConlluError):
        parse_conllu(bad, on_invalid="abort")


def test_head_out_of_range_rejected():
    bad = "\n".join([row(1, "a", 5), row(2, "b", 0), ""])
    assert parse_conllu(bad) == []


def test_malformed_fields_report_line():
    text = MINIMAL + "\n".join(["# c", row(1, "x", 0), "zz\tbad\t_\tX\t_\t_\t0\t_\t_\t_", ""])
    with pytest.raises(ConlluError) as e:
        parse_conllu(text)
    assert e.value.line == 6
    with pytest.raises(ConlluError):
        parse_conllu("1\ta\t_\tX\t_\t_\tHEAD\t_\t_\t_\n")


def test_token_and_sentence_invariants():
    with pytest.raises(ValueError):
        Token(1, "a", "X", 1)
    with pytest.raises(ValueError):
        Sentence.from_heads([2, 1])
    with pytest.raises(ValueError):
        Sentence((Token(2, "a", "X", 0),))
    with pytest.raises(ValueError):
        Treebank("")


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: st.sampled_from(sorted(all_trees(n)))),
       st.lists(st.text(alphabet="abcxyzé", min_size=1, max_size=4), min_size=5, max_size=5))
def test_round_trip(heads, words):
    s = Sentence.from_heads(heads, words[:len(heads)], ["NOUN"] * len(heads), id="r1")
    (back,) = parse_conllu(format_conllu([s]).encode("utf-8"))
    assert back == s


def test_every_token_reaches_root():
    for heads in all_trees(4):
        s = Sentence.from_heads(heads)
        for tok in s.tokens:
            node, steps = tok.index, 0
            while node != 0:
                node = s.heads[node - 1]
                steps += 1
            assert steps <= len(s)


def test_filter_by_size():
    tbs = [Treebank("a", [None] * 999, [None] * 1000), Treebank("b", [None] * 1000, [None] * 1000)]
    assert [t.name for t in filter_by_size(tbs, 1000, 1000)] == ["b"]
    assert filter_by_size(tbs, 0, 0) == tbs
    assert filter_by_size([], 1000, 1000) == []
    with pytest.raises(ValueError):
        filter_by_size(tbs, -1, 0)


def test_default_bins():
    assert DEFAULT_BINS.labels == ["1-3", "4-6", "7-9", "10-12", "13-15", "16-18", "19-21", "22-24",
                                   "25-27", "28-33", "34-39", "40-99"]
    assert BinSpec.parse(str(DEFAULT_BINS)) == DEFAULT_BINS
    with pytest.raises(ValueError):
        BinSpec(((1, 5), (4, 6)))
    with pytest.raises(ValueError):
        BinSpec.parse("1-3,6")


def test_bin_sentences():
    s11 = Sentence.from_heads([0] + [1] * 10)
    s100 = Sentence.from_heads([0] + [1] * 99)
    bins, dropped = bin_sentences([s11, s100])
    assert bins[(10, 12)] == [s11] and dropped == 1
    bins, dropped = bin_sentences([])
    assert all(not v for v in bins.values()) and dropped == 0


@given(st.lists(st.integers(1, 120), max_size=50))
def test_bin_sentences_partitions(lengths):
    items = [[0] * k for k in lengths]
    bins, dropped = bin_sentences(items)
    assert sum(len(v) for v in bins.values()) + dropped == len(items)


def test_bin_stats():
    def tb(name, n11):
        return Treebank(name, [], [Sentence.from_heads([0] + [1] * 10)] * n11)

    (stat,) = [s for s in bin_stats([tb("a", 7)]) if s.bin == "10-12"]
    assert stat.mean == stat.q1 == stat.q3 == 7
    stats = {s.bin: s for s in bin_stats([tb("a", 10), tb("b", 30)])}
    assert stats["10-12"].mean == 20
    assert stats["1-3"].mean == 0 and stats["1-3"].q3 == 0
    assert len(stats) == 12
    with pytest.raises(ValueError):
        bin_stats([])


def test_observed_distribution_examples():
    s = Sentence.from_heads([2, 0])
    assert observed_distribution([s]).mass == {1: 1.0}
    assert observed_distribution([s], include_root_arcs=True).mass == {1: 0.5, -2: 0.5}
    d = observed_distribution([Sentence.from_heads([0, 0, 0, 0, 2])])
    assert d.mass == {-3: 1.0} and d.support_count == 1
    assert observed_distribution([Sentence.from_heads([0])]).support_count == 0


@given(st.integers(1, 5).flatmap(lambda n: st.lists(st.sampled_from(sorted(all_trees(n))), min_size=1, max_size=4)))
def test_observed_distribution_normalized(trees):
    d = observed_distribution([Sentence.from_heads(t) for t in trees])
    qualifying = sum(h != 0 for t in trees for h in t)
    assert d.support_count == qualifying
    if qualifying:
        assert abs(sum(d.mass.values()) - 1) < 1e-9


def test_distribution_validation():
    with pytest.raises(ValueError):
        DisplacementDistribution({0: 1.0})
    with pytest.raises(ValueError):
        DisplacementDistribution({1: 0.7})
    with pytest.raises(ValueError):
        DisplacementDistribution({1: 1.2, 2: -0.2})
    d = DisplacementDistribution({-1: 0.25, 2: 0.75}, 4)
    assert DisplacementDistribution.from_json(d.to_json(), 4) == d
    assert d.mean() == pytest.approx(1.25)


def test_load_and_discover(tmp_path):
    s = Sentence.from_heads([2, 0], ["a", "b"], ["X", "Y"], id="t1")
    for name in ("one", "two"):
        (tmp_path / name).mkdir()
        write_conllu(tmp_path / name / "train.conllu", [s])
        write_conllu(tmp_path / name / "test.conllu", [s, s])
    (tmp_path / "stray").mkdir()
    dirs = discover_treebanks(tmp_path)
    assert [d.name for d in dirs] == ["one", "two"]
    tb = load_treebank(dirs[0])
    assert tb.name == "one" and len(tb.train) == 1 and len(tb.test) == 2
