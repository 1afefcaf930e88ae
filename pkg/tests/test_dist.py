"""Tests for the TriangleDistribution container and its file formats."""

import numpy as np
import pytest

from trianglekit.dist import NORMALIZATION_ATOL, TriangleDistribution, distance
from trianglekit.errors import ValidationError


def random_distribution(rng):
    raw = rng.random((4, 4, 4))
    return TriangleDistribution(raw / raw.sum())


def test_uniform_cells():
    u = TriangleDistribution.uniform()
    assert u.p.shape == (4, 4, 4)
    assert np.all(u.p == 1.0 / 64.0)
    assert float(u.p.sum()) == 1.0


def test_rejects_wrong_shape():
    with pytest.raises(ValidationError):
        TriangleDistribution(np.full((4, 4), 1.0 / 16.0))
    with pytest.raises(ValidationError):
        TriangleDistribution(np.full((4, 4, 4, 4), 1.0 / 256.0))


def test_rejects_negative_entry():
    p = np.full((4, 4, 4), 1.0 / 64.0)
    p[0, 0, 0] = -1.0 / 64.0
    p[0, 0, 1] = 3.0 / 64.0
    with pytest.raises(ValidationError):
        TriangleDistribution(p)


def test_rejects_entry_above_one():
    p = np.zeros((4, 4, 4))
    p[0, 0, 0] = 1.5
    p[0, 0, 1] = -0.5
    with pytest.raises(ValidationError):
        TriangleDistribution(p)


def test_rejects_non_finite():
    p = np.full((4, 4, 4), 1.0 / 64.0)
    p[1, 2, 3] = np.nan
    with pytest.raises(ValidationError):
        TriangleDistribution(p)
    p[1, 2, 3] = np.inf
    with pytest.raises(ValidationError):
        TriangleDistribution(p)


def test_rejects_unnormalized():
    p = np.full((4, 4, 4), 1.0 / 64.0)
    p[0, 0, 0] += 10 * NORMALIZATION_ATOL
    with pytest.raises(ValidationError):
        TriangleDistribution(p)
    # just inside the tolerance is accepted
    q = np.full((4, 4, 4), 1.0 / 64.0)
    q[0, 0, 0] += 0.5 * NORMALIZATION_ATOL
    TriangleDistribution(q)


def test_immutable():
    src = np.full((4, 4, 4), 1.0 / 64.0)
    d = TriangleDistribution(src)
    # mutating the source array after construction must not leak in
    src[0, 0, 0] = 1.0
    assert d[0, 0, 0] == 1.0 / 64.0
    with pytest.raises(ValueError):
        d.p[0, 0, 0] = 0.5


def test_equality_and_hash():
    a = TriangleDistribution.uniform()
    b = TriangleDistribution(np.full((4, 4, 4), 1.0 / 64.0))
    assert a == b
    assert hash(a) == hash(b)
    rng = np.random.default_rng(3)
    c = random_distribution(rng)
    assert a != c
    assert a != "uniform"


def test_getitem():
    rng = np.random.default_rng(4)
    d = random_distribution(rng)
    assert d[1, 2, 3] == d.p[1, 2, 3]
    assert np.array_equal(d[0], d.p[0])


def test_allclose():
    a = TriangleDistribution.uniform()
    p = np.full((4, 4, 4), 1.0 / 64.0)
    p[0, 0, 0] += 5e-11
    p[0, 0, 1] -= 5e-11
    b = TriangleDistribution(p)
    assert a.allclose(b)
    assert not a.allclose(b, atol=1e-12)


def test_json_round_trip_exact(tmp_path):
    rng = np.random.default_rng(5)
    for _ in range(10):
        d = random_distribution(rng)
        path = tmp_path / "d.json"
        d.save_json(path)
        back = TriangleDistribution.load_json(path)
        assert back == d


def test_json_rejects_malformed(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not valid json")
    with pytest.raises(ValidationError):
        TriangleDistribution.load_json(path)
    path.write_text('{"outcomes": 3, "p": []}')
    with pytest.raises(ValidationError):
        TriangleDistribution.load_json(path)
    path.write_text('{"outcomes": 4, "p": [0.5, 0.5]}')
    with pytest.raises(ValidationError):
        TriangleDistribution.load_json(path)
    with pytest.raises(ValidationError):
        TriangleDistribution.from_json_dict([1, 2, 3])


def test_json_index_order():
    # flat index is 16a + 4b + c for zero-based outcome labels
    p = np.zeros((4, 4, 4))
    p[1, 2, 3] = 1.0
    d = TriangleDistribution(p)
    flat = d.to_json_dict()["p"]
    assert flat[16 * 1 + 4 * 2 + 3] == 1.0
    assert sum(flat) == 1.0


def test_csv_round_trip_exact(tmp_path):
    rng = np.random.default_rng(6)
    for _ in range(10):
        d = random_distribution(rng)
        path = tmp_path / "d.csv"
        d.save_csv(path)
        back = TriangleDistribution.load_csv(path)
        assert back == d


def test_csv_uses_one_based_labels(tmp_path):
    path = tmp_path / "d.csv"
    TriangleDistribution.uniform().save_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "a,b,c,p"
    assert lines[1].startswith("1,1,1,")
    assert lines[-1].startswith("4,4,4,")
    assert len(lines) == 65
    # values must be plain decimal literals
    for line in lines[1:]:
        float(line.split(",")[3])


def test_csv_reports_line_numbers(tmp_path):
    path = tmp_path / "d.csv"
    TriangleDistribution.uniform().save_csv(path)
    lines = path.read_text().splitlines()

    bad = lines[:]
    bad[0] = "a,b,c,prob"
    path.write_text("\n".join(bad) + "\n")
    with pytest.raises(ValidationError, match="line 1"):
        TriangleDistribution.load_csv(path)

    bad = lines[:]
    bad[5] = "1,2,x,0.015625"
    path.write_text("\n".join(bad) + "\n")
    with pytest.raises(ValidationError, match="line 6"):
        TriangleDistribution.load_csv(path)

    bad = lines[:]
    bad[7] = "1,2,9,0.015625"
    path.write_text("\n".join(bad) + "\n")
    with pytest.raises(ValidationError, match="line 8"):
        TriangleDistribution.load_csv(path)

    bad = lines[:]
    bad[9] = "1,1,1,0.015625"
    path.write_text("\n".join(bad) + "\n")
    with pytest.raises(ValidationError, match="duplicate"):
        TriangleDistribution.load_csv(path)

    bad = lines[:-1]
    path.write_text("\n".join(bad) + "\n")
    with pytest.raises(ValidationError, match="missing cell"):
        TriangleDistribution.load_csv(path)

    bad = lines[:]
    bad[3] = "1,1,3,abc"
    path.write_text("\n".join(bad) + "\n")
    with pytest.raises(ValidationError, match="line 4"):
        TriangleDistribution.load_csv(path)

    path.write_text("")
    with pytest.raises(ValidationError, match="empty"):
        TriangleDistribution.load_csv(path)


def test_csv_skips_blank_lines(tmp_path):
    path = tmp_path / "d.csv"
    TriangleDistribution.uniform().save_csv(path)
    lines = path.read_text().splitlines()
    lines.insert(10, "")
    path.write_text("\n".join(lines) + "\n")
    assert TriangleDistribution.load_csv(path) == TriangleDistribution.uniform()


def test_distance_known_value():
    u = TriangleDistribution.uniform()
    p = np.full((4, 4, 4), 1.0 / 64.0)
    p[0, 0, 0] += 0.25
    p[3] -= 1.0 / 64.0  # 16 cells drop to zero, balancing the +0.25
    d = TriangleDistribution(p)
    expected = np.sqrt(0.25**2 + 16 * (1.0 / 64.0) ** 2)
    assert distance(u, d) == pytest.approx(expected, abs=1e-15)


def test_distance_properties():
    rng = np.random.default_rng(7)
    for _ in range(20):
        p = random_distribution(rng)
        q = random_distribution(rng)
        assert distance(p, p) == 0.0
        assert distance(p, q) == distance(q, p)
        assert distance(p, q) > 0.0
        # triangle inequality through a third point
        r = random_distribution(rng)
        assert distance(p, q) <= distance(p, r) + distance(r, q) + 1e-12
