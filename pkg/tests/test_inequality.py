"""Tests for the correlation functionals, bounds, and sweep machinery."""

import itertools
import warnings

import numpy as np
import pytest

from trianglekit.dist import TriangleDistribution
from trianglekit.errors import CounterexampleAlarm, ValidationError
from trianglekit.inequality import (
    CLASS_MASKS,
    MASK_ALL_DISTINCT,
    MASK_ALL_EQUAL,
    MASK_TWO_EQUAL,
    BoundEntry,
    check_heuristic_against_bound,
    delta,
    delta_gradient,
    evaluate,
    f_w,
    load_bound_table,
    lookup_bound,
    outcome_classes,
    s111,
    save_bound_table,
    sweep_to_csv,
    sweep_w,
)
from trianglekit.quantum import elegant_distribution


def random_distribution(rng):
    raw = rng.random((4, 4, 4))
    return TriangleDistribution(raw / raw.sum())


def class_constant_distribution(x_equal, x_pair, x_distinct):
    p = np.empty((4, 4, 4))
    p[MASK_ALL_EQUAL] = x_equal
    p[MASK_TWO_EQUAL] = x_pair
    p[MASK_ALL_DISTINCT] = x_distinct
    return TriangleDistribution(p)


def test_masks_partition_the_cube():
    assert int(MASK_ALL_EQUAL.sum()) == 4
    assert int(MASK_TWO_EQUAL.sum()) == 36
    assert int(MASK_ALL_DISTINCT.sum()) == 24
    combined = (
        MASK_ALL_EQUAL.astype(int) + MASK_TWO_EQUAL.astype(int) + MASK_ALL_DISTINCT.astype(int)
    )
    assert np.all(combined == 1)
    classes = outcome_classes()
    assert len(classes["all_equal"]) == 4
    assert len(classes["two_equal"]) == 36
    assert len(classes["all_distinct"]) == 24
    assert (2, 2, 2) in classes["all_equal"]
    assert (0, 1, 2) in classes["all_distinct"]


def test_s111_known_values():
    assert s111(elegant_distribution()) == 0.390625  # 4 * 25/256 = 25/64
    assert s111(TriangleDistribution.uniform()) == 0.0625
    point = np.zeros((4, 4, 4))
    point[2, 2, 2] = 1.0
    assert s111(TriangleDistribution(point)) == 1.0


def test_delta_zero_on_class_constant():
    assert delta(elegant_distribution()) == 0.0
    assert delta(TriangleDistribution.uniform()) == 0.0
    rng = np.random.default_rng(21)
    for _ in range(10):
        x, y = rng.random(2) * 0.01
        z = (1.0 - 4 * x - 36 * y) / 24.0
        d = class_constant_distribution(x, y, z)
        assert delta(d) <= 1e-16  # roundoff only; exactly zero for dyadic cells
        assert s111(d) == pytest.approx(4 * x, abs=1e-15)


def test_delta_known_perturbation():
    # move 1/256 from one all-equal cell to another: the class mean stays
    # 25/256 and two cells deviate by 1/256 each
    p = elegant_distribution().p.copy()
    p[0, 0, 0] += 1.0 / 256.0
    p[1, 1, 1] -= 1.0 / 256.0
    d = delta(TriangleDistribution(p))
    assert d == pytest.approx(2.0 * (1.0 / 256.0) ** 2, abs=1e-18)


def test_delta_quadratic_expansion():
    # delta is a quadratic form; its gradient must satisfy the exact
    # second-order expansion delta(q) = delta(p) + <g(p), q-p> + Q(q-p)
    def centered_quadratic(diff):
        total = 0.0
        for mask in CLASS_MASKS:
            v = diff[mask]
            total += float(np.sum((v - v.mean()) ** 2))
        return total

    rng = np.random.default_rng(22)
    for _ in range(10):
        p = random_distribution(rng)
        q = random_distribution(rng)
        g = delta_gradient(p.p)
        diff = q.p - p.p
        expansion = delta(p) + float(np.sum(g * diff)) + centered_quadratic(diff)
        assert delta(q) == pytest.approx(expansion, abs=1e-15)


def test_delta_gradient_structure():
    rng = np.random.default_rng(23)
    for _ in range(5):
        p = random_distribution(rng)
        g = delta_gradient(p.p)
        # per-class gradient components sum to zero
        for mask in CLASS_MASKS:
            assert float(g[mask].sum()) == pytest.approx(0.0, abs=1e-14)
        # Euler identity for the homogeneous quadratic: <g, p> = 2 delta(p)
        assert float(np.sum(g * p.p)) == pytest.approx(2.0 * delta(p), abs=1e-14)


def test_f_w_values():
    u = TriangleDistribution.uniform()
    for w in (0.0, 0.1, 0.5, 1.0):
        assert f_w(u, w) == w * 0.0625
    e = elegant_distribution()
    assert f_w(e, 0.0922) == 0.0922 * 0.390625
    assert f_w(e, 0.0) == 0.0
    assert f_w(e, 1.0) == 0.390625
    with pytest.raises(ValidationError):
        f_w(u, -0.01)
    with pytest.raises(ValidationError):
        f_w(u, 1.01)


def test_s111_affine_in_mixtures():
    rng = np.random.default_rng(24)
    for _ in range(10):
        p = random_distribution(rng)
        q = random_distribution(rng)
        lam = float(rng.random())
        mix = TriangleDistribution(lam * p.p + (1.0 - lam) * q.p)
        expected = lam * s111(p) + (1.0 - lam) * s111(q)
        assert s111(mix) == pytest.approx(expected, abs=1e-15)


def test_symmetry_under_party_and_outcome_permutations():
    rng = np.random.default_rng(25)
    p = random_distribution(rng)
    for axes in itertools.permutations((0, 1, 2)):
        q = TriangleDistribution(np.transpose(p.p, axes))
        assert s111(q) == pytest.approx(s111(p), abs=1e-15)
        assert delta(q) == pytest.approx(delta(p), abs=1e-15)
    for _ in range(5):
        perm = rng.permutation(4)
        q = TriangleDistribution(p.p[np.ix_(perm, perm, perm)])
        assert s111(q) == pytest.approx(s111(p), abs=1e-15)
        assert delta(q) == pytest.approx(delta(p), abs=1e-15)


def test_evaluate_ideal_margin():
    report = evaluate(elegant_distribution(), w=0.0922, bound=0.0264)
    assert report.margin == 0.0922 * 0.390625 - 0.0264
    assert 0.0094 <= report.margin <= 0.0098
    assert report.classification == "violated"
    assert report.f_value == report.margin + report.bound
    assert report.delta == 0.0
    assert report.s111 == 0.390625


def test_evaluate_satisfied_cases():
    u = TriangleDistribution.uniform()
    report = evaluate(u, w=0.0922, bound=0.0264)
    assert report.classification == "satisfied"
    assert report.margin < 0.0
    # an exactly met bound is not a violation
    report = evaluate(u, w=0.5, bound=0.03125)
    assert report.margin == 0.0
    assert report.classification == "satisfied"
    with pytest.raises(ValidationError):
        evaluate(u, w=1.5, bound=0.0)


def test_evaluate_report_json():
    report = evaluate(TriangleDistribution.uniform(), w=0.25, bound=0.1)
    obj = report.to_json_dict()
    assert obj["classification"] == "satisfied"
    assert obj["w"] == 0.25
    assert set(obj) == {"w", "s111", "delta", "f_value", "bound", "margin", "classification"}


def test_sweep_rows_match_evaluate():
    e = elegant_distribution()
    bounds = [(0.0922, 0.0264), (0.5, 0.2)]
    rows = sweep_w(e, bounds)
    assert len(rows) == 2
    first = rows[0]
    assert first.report == evaluate(e, 0.0922, 0.0264)
    # the reference distribution has ratio exactly 1 where its margin is positive
    assert first.ratio_vs_elegant == pytest.approx(1.0, abs=1e-12)
    # at w=0.5 the ideal f value 0.1953125 sits below the bound: no ratio
    assert rows[1].ratio_vs_elegant is None
    with pytest.raises(ValidationError):
        sweep_w(e, [])


def test_sweep_accepts_bound_entries():
    entries = [BoundEntry(w=0.0922, bound=0.0264, provenance="published", seed=None)]
    rows = sweep_w(TriangleDistribution.uniform(), entries)
    assert rows[0].report.bound == 0.0264
    assert rows[0].report.classification == "satisfied"
    assert rows[0].ratio_vs_elegant < 0.0


def test_sweep_to_csv(tmp_path):
    e = elegant_distribution()
    rows = sweep_w(e, [(0.0922, 0.0264), (0.5, 0.2)])
    path = tmp_path / "sweep.csv"
    sweep_to_csv(rows, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "w,s111,delta,f_value,bound,margin,ratio_vs_elegant"
    assert len(lines) == 3
    fields = lines[1].split(",")
    assert float(fields[0]) == 0.0922
    assert float(fields[1]) == 0.390625
    assert float(fields[5]) == 0.0922 * 0.390625 - 0.0264
    assert lines[2].endswith(",")  # empty ratio field for the None row


def test_bound_table_round_trip(tmp_path):
    entries = [
        BoundEntry(w=0.0922, bound=0.0264, provenance="published", seed=None),
        BoundEntry(w=0.1, bound=0.0291, provenance="heuristic", seed=20015),
    ]
    path = tmp_path / "bounds.csv"
    save_bound_table(entries, path)
    back = load_bound_table(path)
    assert back == entries


def test_bound_table_rejects_malformed(tmp_path):
    path = tmp_path / "bounds.csv"
    path.write_text("w,bound\n0.1,0.02\n")
    with pytest.raises(ValidationError, match="header"):
        load_bound_table(path)
    path.write_text("w,bound,provenance,seed\n0.1,abc,heuristic,\n")
    with pytest.raises(ValidationError, match="line 2"):
        load_bound_table(path)
    path.write_text("w,bound,provenance,seed\n0.1,0.02,heuristic,x7\n")
    with pytest.raises(ValidationError, match="line 2"):
        load_bound_table(path)
    path.write_text("w,bound,provenance,seed\n1.5,0.02,heuristic,\n")
    with pytest.raises(ValidationError, match="w must be"):
        load_bound_table(path)
    path.write_text("w,bound,provenance,seed\n")
    with pytest.raises(ValidationError, match="no bound entries"):
        load_bound_table(path)


def test_lookup_bound():
    entries = [
        BoundEntry(w=0.05, bound=0.01, provenance="heuristic", seed=1),
        BoundEntry(w=0.1, bound=0.03, provenance="heuristic", seed=2),
    ]
    assert lookup_bound(entries, 0.1).bound == 0.03
    assert lookup_bound(entries, 0.1 + 5e-10).bound == 0.03
    assert lookup_bound(entries, 0.07) is None
    assert lookup_bound(entries, 0.0751, atol=0.03).w == 0.1


def test_heuristic_alarm():
    with pytest.warns(CounterexampleAlarm):
        flagged = check_heuristic_against_bound(0.0285, w=0.1, bound=0.027)
    assert flagged
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert not check_heuristic_against_bound(0.0275, w=0.1, bound=0.027)
        assert not check_heuristic_against_bound(0.020, w=0.1, bound=0.027)
