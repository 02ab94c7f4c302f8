import random

import pytest

from parsebias.synthetic import PROFILES, generate_sentence, generate_treebank, write_treebank
from parsebias.transitions import is_projective, tree_error
from parsebias.treebank import load_treebank


@pytest.mark.parametrize("profile", sorted(PROFILES))
def test_sentences_are_valid_trees(profile):
    rng = random.Random(1)
    for i in range(200):
        s = generate_sentence(rng, PROFILES[profile], "x", f"s{i}")
        assert tree_error(s.heads) is None
        assert s.tokens[-1].upos == "PUNCT"
        assert s.heads[-1] == s.heads.index(0) + 1


def test_generation_is_deterministic():
    a = generate_treebank("head_final", "head_final", n_train=30, n_test=10, seed=3)
    b = generate_treebank("head_final", "head_final", n_train=30, n_test=10, seed=3)
    assert [s.heads for s in a.train] == [s.heads for s in b.train]
    c = generate_treebank("head_final", "head_final", n_train=30, n_test=10, seed=4)
    assert [s.heads for s in a.train] != [s.heads for s in c.train]


def test_head_direction_profiles_differ():
    def leftward_share(name):
        tb = generate_treebank(name, name, n_train=300, n_test=0)
        arcs = [(h, d) for s in tb.train for d, h in enumerate(s.heads, 1) if h]
        return sum(h > d for h, d in arcs) / len(arcs)
    assert leftward_share("head_final") > leftward_share("head_initial")


def test_free_order_has_nonprojective_trees():
    tb = generate_treebank("free_order", "free_order", n_train=300, n_test=0)
    assert any(not is_projective(s.heads) for s in tb.train)


def test_write_and_reload(tmp_path):
    tb = generate_treebank("verb_initial", "verb_initial", n_train=20, n_test=5)
    path = write_treebank(tb, tmp_path)
    back = load_treebank(path)
    assert back.name == "verb_initial"
    assert [s.heads for s in back.train] == [s.heads for s in tb.train]
    assert [s.forms for s in back.test] == [s.forms for s in tb.test]
