import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from majorant import mesh as M


def test_counts_small():
    m = M.build_rectangle(1, 1)
    assert (m.n_vertices, m.n_triangles, m.boundary_edges.shape[0]) == (4, 2, 4)
    m = M.build_rectangle(2, 2)
    assert (m.n_vertices, m.n_triangles) == (9, 8)


@given(st.integers(1, 12), st.integers(1, 12))
def test_area_sum(nx, ny):
    m = M.build_rectangle(nx, ny)
    assert abs(m.areas.sum() - 1.0) <= 1e-14
    assert np.all(m.signed_areas > 0)
    assert m.n_edges == m.n_vertices + m.n_triangles - 1  # Euler, simply connected


def test_side_tags():
    m = M.build_rectangle(3, 2, M.side_tags("D", "N", "R", "N"))
    mids = m.vertices[m.boundary_edges].mean(axis=1)
    for (x, y), tag in zip(mids, m.boundary_tags):
        expected = "D" if x == 0 else "N" if x == 1 else "R" if y == 0 else "N"
        assert tag == expected


def test_outward_normals():
    m = M.build_rectangle(3, 3)
    ids = m.tagged_edges("D")
    n = m.edge_normals()[ids] * m.outward_sign(ids)[:, None]
    mids = m.vertices[m.edges[ids]].mean(axis=1)
    # outward normal points away from the centre of the square
    assert np.all(np.sum(n * (mids - 0.5), axis=1) > 0)


def test_bisect_empty_marking_is_identity():
    m = M.build_rectangle(2, 2)
    assert M.bisect(m, set()) is m


def test_bisect_single_triangle():
    m = M.build_rectangle(1, 1)
    r = M.bisect(m, {0}).validate()
    assert r.areas.sum() == pytest.approx(1.0, abs=1e-15)
    # the diagonal is shared, so both triangles are cut
    assert r.n_triangles == 4


def test_bisect_tags_inherited():
    m = M.build_rectangle(2, 2, M.side_tags("D", "N", "R", "N"))
    r = M.refine_uniform(m, 2).validate()
    mids = r.vertices[r.boundary_edges].mean(axis=1)
    assert np.all(r.boundary_tags[mids[:, 0] == 0] == "D")
    assert np.all(r.boundary_tags[(mids[:, 1] == 0) & (mids[:, 0] > 0) & (mids[:, 0] < 1)] == "R")


def test_bisect_rejects_bad_ids():
    with pytest.raises(IndexError):
        M.bisect(M.build_rectangle(1, 1), {5})


def test_repeated_uniform_refinement_shape():
    m = M.build_rectangle(2, 2)
    angle0 = m.min_angle()
    for k in range(1, 5):
        m = M.bisect(m, range(m.n_triangles)).validate()
        assert m.n_triangles == 8 * 2**k
        assert m.min_angle() >= angle0 - 1e-9


@given(st.integers(0, 2**31 - 1))
def test_random_bisection_stays_conforming(seed):
    rng = np.random.default_rng(seed)
    m = M.build_rectangle(2, 2, M.side_tags("D", "N", "N", "R"))
    for _ in range(5):
        k = int(rng.integers(1, max(2, m.n_triangles // 3)))
        m = M.bisect(m, set(rng.choice(m.n_triangles, size=k, replace=False).tolist())).validate()
        assert abs(m.areas.sum() - 1) <= 1e-13
        assert m.min_angle() >= 45 - 1e-9


def test_round_trip(tmp_path):
    meshes = [
        M.build_rectangle(1, 1),
        M.build_rectangle(3, 2, M.side_tags("D", "N", "R", "N")),
        M.bisect(M.build_rectangle(2, 3, bounds=(0.1, 0.7, -1.0, 0.3)), {0, 5}),
    ]
    for k, m in enumerate(meshes):
        path = tmp_path / f"m{k}.txt"
        M.save(m, path)
        r = M.load(path)
        assert np.array_equal(r.vertices, m.vertices)
        assert np.array_equal(r.triangles, m.triangles)
        assert np.array_equal(r.boundary_edges, m.boundary_edges)
        assert np.array_equal(r.boundary_tags, m.boundary_tags)
        assert M.dumps(r) == M.dumps(m)


def test_empty_file():
    with pytest.raises(M.MeshFormatError):
        M.loads("")
    with pytest.raises(M.MeshFormatError):
        M.loads("# only a comment\n\n")


def test_error_line_numbers():
    text = M.dumps(M.build_rectangle(1, 1)).replace("TRIANGLES 2", "TRIANGLES two")
    with pytest.raises(M.MeshFormatError) as info:
        M.loads(text)
    assert info.value.lineno == 7


def test_rejects_bad_tag_and_orientation():
    text = M.dumps(M.build_rectangle(1, 1))
    with pytest.raises(M.MeshFormatError):
        M.loads(text.replace(" D\n", " X\n", 1))
    with pytest.raises(M.MeshError):
        M.loads(text.replace("1 3 0", "3 1 0"))


def test_rejects_missing_boundary():
    m = M.build_rectangle(1, 1)
    with pytest.raises(M.MeshError):
        M.Mesh2D(m.vertices, m.triangles, m.boundary_edges[:3], m.boundary_tags[:3]).validate()


def test_rejects_nonconforming():
    # triangle (0,1,2) next to two triangles hanging on the midpoint of its edge
    v = [[0, 0], [1, 0], [0, 1], [0.5, 0.5], [1, 1]]
    t = [[0, 1, 2], [3, 1, 4], [3, 4, 2]]
    b = [[0, 1], [1, 4], [4, 2], [2, 0]]
    with pytest.raises(M.MeshError):
        M.Mesh2D(v, t, b, ["D"] * 4).validate()


_BASE = M.dumps(M.build_rectangle(1, 1))


@given(st.text(max_size=40), st.integers(0, len(_BASE.splitlines()) - 1))
def test_fuzzed_lines_never_crash(junk, line):
    lines = _BASE.splitlines()
    lines[line] = junk
    try:
        M.loads("\n".join(lines))
    except M.MeshError:
        pass


@given(st.text(max_size=30))
def test_fuzzed_header(junk):
    try:
        M.loads(junk + "\n" + _BASE.split("\n", 2)[2])
    except M.MeshError:
        pass
