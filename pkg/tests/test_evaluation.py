import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pccd.crystal import CrystalStructure, lattice_from_parameters, min_image_delta
from pccd.errors import EmptySeries, Unmatched
from pccd.evaluation import (
    CorpusIndex,
    MatchReport,
    atom_count_confusion,
    bond_graph,
    confusion_csv,
    coordinate_relative_errors,
    error_series,
    evaluate_pair,
    graph_edit_distance,
    lattice_relative_errors,
    match_atoms,
    match_report_csv,
    matched_distances,
    novelty_check,
    rms_anonymous_distance,
    summarize,
    summary_csv,
    summary_table,
    superpose_distance,
)

from _helpers import cubic, mgmno3, random_structure


def shifted(s, shift):
    return CrystalStructure(s.lattice, s.species, s.frac + np.asarray(shift))


def with_frac(s, frac):
    return CrystalStructure(s.lattice, s.species, frac)


# --- matching ---------------------------------------------------------------------------


def test_match_identity():
    s = mgmno3()
    a = match_atoms(s, s)
    assert a == [(i, i) for i in range(5)]
    assert np.all(matched_distances(a, s, s) == 0)


def test_match_shifted_by_098():
    s = mgmno3()
    p = shifted(s, [0.98, 0.98, 0.98])
    a = match_atoms(s, p)
    assert sorted(j for _, j in a) == list(range(5))
    expect = np.linalg.norm(np.array([-0.02, -0.02, -0.02]) @ s.lattice.vectors)
    assert np.allclose(matched_distances(a, s, p), expect, atol=1e-12)


def test_match_count_mismatch_is_unmatched():
    s = mgmno3()
    four = CrystalStructure(s.lattice, s.species[:4], s.frac[:4])
    assert match_atoms(four, s) is None
    with pytest.raises(Unmatched):
        superpose_distance(four, s)
    with pytest.raises(Unmatched):
        rms_anonymous_distance(s, four)


def _brute_greedy(o, p, species_aware):
    d = np.linalg.norm(min_image_delta(o.frac[:, None], p.frac[None]) @ o.lattice.vectors, axis=-1)
    pairs = sorted((d[i, j], i, j) for i in range(o.num_sites) for j in range(p.num_sites))
    used_o, used_p, out = set(), set(), {}
    for _, i, j in pairs:
        if i in used_o or j in used_p or (species_aware and o.species[i] != p.species[j]):
            continue
        used_o.add(i)
        used_p.add(j)
        out[i] = j
    return out


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_match_equals_sorted_pair_oracle(seed, aware):
    rng = np.random.default_rng(seed)
    o = random_structure(rng, n_sites=int(rng.integers(1, 12)))
    p = with_frac(o, o.frac + rng.normal(0, 0.05, o.frac.shape))
    p = CrystalStructure(o.lattice, list(rng.permutation(o.species)), p.frac)
    got = dict(match_atoms(o, p, species_aware=aware))
    want = _brute_greedy(o, p, aware)
    for i, j in want.items():
        assert got[i] == j
    assert sorted(got.values()) == list(range(o.num_sites))


def test_match_ties_break_by_index():
    lat = cubic(5.0)
    o = CrystalStructure(lat, ["Li", "Li"], [[0.1, 0.1, 0.1], [0.1, 0.1, 0.1]])
    assert match_atoms(o, o) == [(0, 0), (1, 1)]


def test_match_total_distance_invariant_under_lattice_translation():
    rng = np.random.default_rng(4)
    o = random_structure(rng, n_sites=8)
    p = with_frac(o, o.frac + rng.normal(0, 0.03, o.frac.shape))
    base = matched_distances(match_atoms(o, p), o, p).sum()
    moved = shifted(p, [1, -2, 3])
    assert matched_distances(match_atoms(o, moved), o, moved).sum() == pytest.approx(base, abs=1e-12)


# --- relative errors --------------------------------------------------------------------


def test_lattice_relative_errors():
    s = mgmno3()
    assert np.all(lattice_relative_errors(s, s) == 0)
    bigger = CrystalStructure(lattice_from_parameters(3.75 * 1.0381, 3.75, 3.75, *[np.pi / 2] * 3), s.species, s.frac)
    assert lattice_relative_errors(s, bigger) == pytest.approx([0.0381, 0, 0], abs=1e-12)
    doubled = CrystalStructure(lattice_from_parameters(7.5, 3.75, 3.75, *[np.pi / 2] * 3), s.species, s.frac)
    assert lattice_relative_errors(s, doubled)[0] == pytest.approx(1.0)


def test_coordinate_relative_errors_examples():
    lat = cubic(5.0)
    o = CrystalStructure(lat, ["Li"], [[0.5, 0.0, 0.25]])
    p = CrystalStructure(lat, ["Li"], [[0.52, 0.98, 0.25]])
    err, flag = coordinate_relative_errors([(0, 0)], o, p, wrap=True)
    assert err[0, 0] == pytest.approx(0.04, abs=1e-12)
    assert err[0, 1] == pytest.approx(-0.02, abs=1e-12) and flag[0, 1]
    assert err[0, 2] == 0 and not flag[0, 0] and not flag[0, 2]
    raw, _ = coordinate_relative_errors([(0, 0)], o, p, wrap=False)
    assert raw[0, 1] == pytest.approx(0.98)


def test_coordinate_relative_errors_identical():
    s = mgmno3()
    err, _ = coordinate_relative_errors(match_atoms(s, s), s, s)
    assert np.all(err == 0)


# --- confusion --------------------------------------------------------------------------


def test_confusion_identity_and_single_miss():
    s = mgmno3()
    m, frac = atom_count_confusion([(s, s), (s, s)])
    assert m[5, 5] == 2 and frac == 1.0
    four = CrystalStructure(s.lattice, s.species[:4], s.frac[:4])
    m, frac = atom_count_confusion([(s, four)])
    assert m[5, 4] == 1 and m.sum() == 1 and frac == 0.0


def test_confusion_868_of_1280():
    pairs = [(4, 4)] * 868 + [(4, 5)] * 200 + [(6, 3)] * 212
    m, frac = atom_count_confusion(pairs)
    assert frac == 0.678125
    assert m.sum() == 1280


def test_confusion_csv_layout():
    m, _ = atom_count_confusion([(2, 1), (1, 1)])
    lines = confusion_csv(m).splitlines()
    assert lines == ["original\\predicted,1,2", "1,1,0", "2,1,0"]


# --- translation distances -------------------------------------------------------------


def test_superpose_identity_and_translation():
    rng = np.random.default_rng(0)
    s = random_structure(rng, n_sites=9)
    assert superpose_distance(s, s) == pytest.approx(0, abs=1e-12)
    t = shifted(s, [0.37, -0.11, 0.093])
    assert superpose_distance(s, t) < 1e-6
    assert rms_anonymous_distance(s, t) < 1e-6


@pytest.mark.parametrize("n", [6, 10, 16])
def test_superpose_single_displacement(n):
    rng = np.random.default_rng(n)
    s = random_structure(rng, n_sites=n, min_sep=0.2)
    s = CrystalStructure(cubic(8.0), s.species, s.frac)
    d = 0.1
    frac = s.frac.copy()
    frac[0, 0] += d / 8.0
    got = superpose_distance(s, with_frac(s, frac))
    # the optimal shift absorbs the mean displacement d/N
    assert got == pytest.approx(d * np.sqrt(n - 1) / n, rel=1e-6)
    assert abs(got / (d / np.sqrt(n)) - 1) < 0.1


def test_rms_anonymous_ignores_species():
    # no translation maps this geometry onto itself with the labels swapped
    lat = cubic(4.0)
    frac = [[0, 0, 0], [0.3, 0, 0], [0, 0.6, 0]]
    a = CrystalStructure(lat, ["Cs", "Cl", "Cl"], frac)
    b = CrystalStructure(lat, ["Cl", "Cs", "Cl"], frac)
    assert rms_anonymous_distance(a, b) == pytest.approx(0, abs=1e-12)
    assert superpose_distance(a, b) > 0.5


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_distance_properties(seed):
    rng = np.random.default_rng(seed)
    o = random_structure(rng, n_sites=int(rng.integers(2, 9)))
    p = CrystalStructure(o.lattice, list(rng.permutation(o.species)), o.frac + rng.normal(0, 0.04, o.frac.shape))
    sp, ra = superpose_distance(o, p), rms_anonymous_distance(o, p)
    assert 0 <= ra <= sp + 1e-12
    # symmetric when both share the metricizing lattice
    assert superpose_distance(p, o) == pytest.approx(sp, abs=1e-9)
    assert rms_anonymous_distance(p, o) == pytest.approx(ra, abs=1e-9)


# --- graph edit distance ---------------------------------------------------------------------


def _brute_ged(o, p, cutoff):
    a1, a2 = bond_graph(o, cutoff), bond_graph(p, cutoff)
    best = None
    nodes = 0
    per_class = []
    for sym in sorted(set(o.species) | set(p.species)):
        u = [i for i, s in enumerate(o.species) if s == sym]
        v = [j for j, s in enumerate(p.species) if s == sym]
        nodes += abs(len(u) - len(v))
        n = max(len(u), len(v))
        per_class.append((u + [-1] * (n - len(u)), v + [-1] * (n - len(v))))
    for perms in itertools.product(*[itertools.permutations(v) for _, v in per_class]):
        us = [x for u, _ in per_class for x in u]
        vs = [y for pv in perms for y in pv]
        cost = 0
        for i, j in itertools.combinations(range(len(us)), 2):
            e1 = us[i] >= 0 and us[j] >= 0 and a1[us[i], us[j]]
            e2 = vs[i] >= 0 and vs[j] >= 0 and a2[vs[i], vs[j]]
            cost += e1 != e2
        best = cost if best is None else min(best, cost)
    return nodes + best


def _three_atoms(y):
    return CrystalStructure(cubic(10.0), ["O", "O", "O"], [[0, 0, 0], [0.2, 0, 0], [0, y, 0]])


def test_ged_examples():
    s = _three_atoms(0.25)
    assert bond_graph(s, 3.0).sum() == 4  # edges 0-1 and 0-2, both directions
    assert graph_edit_distance(s, s).distance == 0
    # pull one atom out of bonding range
    r = graph_edit_distance(s, _three_atoms(0.35))
    assert r.distance == 1 and r.exact
    # tightening the cutoff past the 2.5 A bond removes it
    assert bond_graph(s, 2.2).sum() == 2


def test_ged_node_term():
    s = mgmno3()
    four = CrystalStructure(s.lattice, s.species[:4], s.frac[:4])
    r = graph_edit_distance(s, four)
    assert r.distance >= 1
    assert r.distance == _brute_ged(s, four, 3.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ged_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    o = random_structure(rng, n_sites=int(rng.integers(1, 7)))
    o = CrystalStructure(cubic(rng.uniform(4, 7)), o.species, o.frac)
    keep = rng.random(o.num_sites) < 0.85
    keep[0] = True
    frac = o.frac[keep] + rng.normal(0, 0.08, (int(keep.sum()), 3))
    p = CrystalStructure(o.lattice, [sp for sp, k in zip(o.species, keep) if k], frac)
    r = graph_edit_distance(o, p)
    assert r.exact
    assert r.distance == _brute_ged(o, p, 3.0)
    assert graph_edit_distance(o, o).distance == 0


def test_ged_large_class_is_upper_bound():
    rng = np.random.default_rng(1)
    s = random_structure(rng, n_sites=12, min_sep=0.1)
    s = CrystalStructure(cubic(6.0), ["Si"] * 12, s.frac)
    p = with_frac(s, s.frac + rng.normal(0, 0.05, s.frac.shape))
    r = graph_edit_distance(s, p)
    assert isinstance(r.distance, int) and r.distance >= 0
    assert graph_edit_distance(s, s).distance == 0


def test_pair_cutoffs_override():
    s = CrystalStructure(cubic(10.0), ["Na", "Cl"], [[0, 0, 0], [0.28, 0, 0]])
    assert bond_graph(s, 3.0).sum() == 2
    assert bond_graph(s, 3.0, {("Cl", "Na"): 2.5}).sum() == 0


# --- novelty ------------------------------------------------------------------------------


def test_novelty_examples():
    rng = np.random.default_rng(3)
    s = mgmno3()
    corpus = CorpusIndex([("mgmno3", s), ("nacl", CrystalStructure(cubic(5.6), ["Na", "Cl"], [[0, 0, 0], [0.5, 0.5, 0.5]]))])
    assert len(corpus) == 2
    hit = novelty_check(s, corpus)
    assert not hit.novel and hit.match_id == "mgmno3" and hit.distance < 1e-9
    other = CrystalStructure(cubic(4.0), ["Li", "O"], [[0, 0, 0], [0.5, 0.5, 0.5]])
    assert novelty_check(other, corpus).novel
    # 0.01 angstrom random displacement per site
    step = rng.normal(size=s.frac.shape)
    step *= 0.01 / np.linalg.norm(step @ s.lattice.vectors, axis=1, keepdims=True)
    moved = with_frac(s, s.frac + step)
    res = novelty_check(moved, corpus)
    assert not res.novel and res.distance <= 0.01
    far = with_frac(s, s.frac + np.array([[0.4, 0, 0]] + [[0, 0, 0]] * 4))
    assert novelty_check(far, corpus, tol=0.3).novel


# --- statistics ---------------------------------------------------------------------------


def test_summarize_examples():
    c = summarize([2.5] * 7)
    assert (c.median, c.q1, c.q3, c.lower_whisker, c.upper_whisker, c.effective_rate) == (2.5, 2.5, 2.5, 2.5, 2.5, 1.0)
    r = summarize(range(1, 101))
    assert (r.median, r.q1, r.q3) == (50.5, 25.75, 75.25)
    assert (r.lower_whisker, r.upper_whisker) == (1.0, 100.0)
    o = summarize([0.0] * 99 + [1e6])
    assert o.effective_rate == 0.99
    with pytest.raises(EmptySeries):
        summarize([])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=60), st.floats(0.01, 100))
def test_summarize_properties(values, scale):
    a = summarize(values)
    assert a.lower_whisker <= a.q1 + 1e-9 and a.q1 <= a.median <= a.q3 and a.q3 <= a.upper_whisker + 1e-9
    b = summarize(list(reversed(values)))
    assert (a.median, a.q1, a.q3) == (b.median, b.q1, b.q3)
    c = summarize([scale * v for v in values])
    assert c.median == pytest.approx(scale * a.median, rel=1e-9, abs=1e-9)
    assert c.q1 == pytest.approx(scale * a.q1, rel=1e-9, abs=1e-9)


# --- reports --------------------------------------------------------------------------------


def test_evaluate_pair_and_csv():
    s = mgmno3()
    good = evaluate_pair("a", s, shifted(s, [0.98, 0, 0]))
    assert good.matched and good.ged == 0 and good.ged_exact and good.superpose < 1e-6
    four = CrystalStructure(s.lattice, s.species[:4], s.frac[:4])
    bad = evaluate_pair("b", s, four)
    assert not bad.matched and bad.superpose is None and bad.ged >= 1
    failed = evaluate_pair("c", s, None)
    text = match_report_csv([good, bad, failed]).splitlines()
    assert text[0] == "id,matched,rel_err_a,rel_err_b,rel_err_c,mean_abs_coord_err,superpose,rms_anon,ged,ged_exact_flag"
    assert text[1].startswith("a,1,0.0,0.0,0.0,")
    assert text[2].split(",")[1] == "0" and text[2].split(",")[6] == ""
    assert text[3] == "c,0,,,,,,,,"


def test_error_series_excludes_absolute_entries():
    lat = cubic(5.0)
    o = CrystalStructure(lat, ["Li", "Li"], [[0.0, 0.5, 0.5], [0.25, 0.25, 0.25]])
    p = CrystalStructure(lat, ["Li", "Li"], [[0.01, 0.55, 0.5], [0.25, 0.25, 0.3]])
    series = error_series([evaluate_pair("x", o, p, distances=False)])
    assert sorted(series["x"]) == [0.0]
    assert sorted(series["y"]) == pytest.approx([0.0, 0.1])
    assert len(series["a"]) == 1


def test_summary_csv_layout():
    table = summary_table({"a": np.array([0.0, 0.1]), "b": np.array([]), "c": np.zeros(3), "x": np.ones(2), "y": np.ones(2), "z": np.ones(2)})
    lines = summary_csv(table).splitlines()
    assert lines[0] == "statistic,a,b,c,x,y,z"
    assert [l.split(",")[0] for l in lines[1:]] == ["efficiency", "upper limit", "lower limit"]
    assert lines[1].split(",")[2] == ""
    assert float(lines[2].split(",")[1]) == pytest.approx(0.1)


def test_report_defaults():
    r = MatchReport("z", False, 3, 0)
    assert r.assignment == [] and r.ged is None
