import numpy as np
import pytest

from roughpaths.errors import ChenDefectError, GridError
from roughpaths.grids import SampledPath, TimeGrid, holder_seminorm
from roughpaths.rough import (
    RawLevel2,
    RoughPath,
    bracket_one_param,
    bracket_two_param,
    chen_defect,
    from_json_dict,
    is_weakly_geometric,
    lift_piecewise_linear,
    max_chen_defect,
    perturbed_lift,
    rough_metric,
    rough_norm,
    rough_seminorm,
    second_level,
    to_json_dict,
)
from roughpaths.tensor import outer, sym


def random_rough_path(rng, n=32, d=2, horizon=1.0):
    g = TimeGrid.uniform(horizon, n)
    values = rng.standard_normal((n + 1, d)).cumsum(axis=0) * 0.2
    blocks = rng.standard_normal((n, d, d)) * 0.05
    return RoughPath(g, values, blocks)


def brownian_like(rng, n=64, d=2):
    g = TimeGrid.uniform(1.0, n)
    dt = 1.0 / n
    values = np.zeros((n + 1, d))
    values[1:] = (rng.standard_normal((n, d)) * np.sqrt(dt)).cumsum(axis=0)
    return SampledPath(g, values)


def full_field(R):
    n1 = len(R.grid)
    F = np.zeros((n1, n1, R.dim, R.dim))
    for i in range(n1):
        for j in range(n1):
            F[i, j] = second_level(R, i, j)
    return F


# ------------------------------------------------------------------ second_level


def test_second_level_diagonal_and_single_interval():
    g = TimeGrid([0.0, 1.0, 2.0])
    R = RoughPath(g, np.array([[0.0], [1.0], [3.0]]), np.array([[[0.5]], [[2.0]]]))
    assert np.array_equal(second_level(R, 1, 1), np.zeros((1, 1)))
    assert second_level(R, 0, 1)[0, 0] == 0.5
    assert second_level(R, 1, 2)[0, 0] == 2.0


def test_second_level_hand_computed_sum():
    # three nodes, d=1, X=(0,1,3), blocks=(0.5, 2):
    # XX_{0,2} = 0.5 + 2 + X_{0,1} * X_{1,2} = 0.5 + 2 + 1*2 = 4.5
    g = TimeGrid([0.0, 1.0, 2.0])
    R = RoughPath(g, np.array([[0.0], [1.0], [3.0]]), np.array([[[0.5]], [[2.0]]]))
    assert second_level(R, 0, 2)[0, 0] == pytest.approx(4.5, abs=1e-14)


def test_second_level_reversed_pair():
    rng = np.random.default_rng(0)
    R = random_rough_path(rng, n=8)
    for i, j in [(3, 1), (7, 0), (5, 5)]:
        dx = R.values[j] - R.values[i]
        expected = np.outer(dx, dx) - second_level(R, j, i) if j < i else second_level(R, i, j)
        np.testing.assert_allclose(second_level(R, i, j), expected, atol=1e-14)


def test_second_level_index_range():
    rng = np.random.default_rng(1)
    R = random_rough_path(rng, n=4)
    with pytest.raises(GridError):
        second_level(R, 0, 9)


# ------------------------------------------------------------------ chen defect


def test_chen_defect_zero_for_constructed_paths():
    rng = np.random.default_rng(2)
    R = random_rough_path(rng, n=20)
    F = full_field(R)
    P = R.path()
    for i, u, j in [(0, 5, 9), (1, 1, 18), (0, 10, 20), (4, 12, 19)]:
        np.testing.assert_allclose(
            chen_defect(P, F, i, u, j), np.zeros((R.dim, R.dim)), atol=1e-12
        )
    assert max_chen_defect(R) <= 1e-12


def test_chen_defect_of_zero_field_is_cross_term():
    rng = np.random.default_rng(3)
    P = brownian_like(rng, n=12)
    n1 = len(P)
    zero = np.zeros((n1, n1, P.dim, P.dim))
    i, u, j = 2, 6, 11
    got = chen_defect(P, zero, i, u, j)
    want = -np.outer(P.values[u] - P.values[i], P.values[j] - P.values[u])
    np.testing.assert_allclose(got, want, atol=1e-14)
    assert np.linalg.norm(got) > 0


def test_chen_defect_invariant_under_one_param_perturbation():
    # Adding increments F_t - F_s of any one-parameter function to the field
    # leaves the defect unchanged.
    rng = np.random.default_rng(4)
    R = random_rough_path(rng, n=16)
    F = full_field(R)
    P = R.path()
    oneparam = rng.standard_normal((len(P), R.dim, R.dim))
    Fbar = F + oneparam[None, :, :, :] - oneparam[:, None, :, :]
    for i, u, j in [(0, 4, 9), (2, 8, 15), (1, 1, 12)]:
        np.testing.assert_allclose(
            chen_defect(P, F, i, u, j), chen_defect(P, Fbar, i, u, j), atol=1e-12
        )
    with pytest.raises(GridError):
        chen_defect(P, F, 5, 2, 9)


# ------------------------------------------------------------------ PL lift


def test_lift_constant_path_is_zero():
    g = TimeGrid.uniform(1.0, 8)
    R = lift_piecewise_linear(SampledPath(g, np.full((9, 2), 3.0)))
    assert np.all(R.blocks == 0.0)


def test_lift_single_segment_half():
    g = TimeGrid([0.0, 1.0])
    R = lift_piecewise_linear(SampledPath(g, np.array([[0.0], [1.0]])))
    assert R.blocks[0, 0, 0] == 0.5


def test_lift_parabola_iterated_integrals():
    # X_t = (t, t^2) on [0, 1]: the iterated integrals are
    # [[1/2, 2/3], [1/3, 1/2]].
    n = 1024
    g = TimeGrid.uniform(1.0, n)
    t = g.times
    P = SampledPath(g, np.stack([t, t**2], axis=1))
    R = lift_piecewise_linear(P)
    got = second_level(R, 0, n)
    want = np.array([[0.5, 2.0 / 3.0], [1.0 / 3.0, 0.5]])
    np.testing.assert_allclose(got, want, atol=1e-4)


def test_lift_is_weakly_geometric():
    rng = np.random.default_rng(5)
    P = brownian_like(rng, n=128)
    R = lift_piecewise_linear(P)
    assert is_weakly_geometric(R, 1e-12)
    assert np.max(np.abs(R.bracket_path())) <= 1e-12


def test_lift_integration_by_parts():
    # For X_0 = 0: Sym(XX_{0,j}) = (X_j (x) X_j) / 2 at every node.
    rng = np.random.default_rng(6)
    P = brownian_like(rng, n=64)
    R = lift_piecewise_linear(P)
    for j in (1, 13, 40, 64):
        lhs = sym(second_level(R, 0, j))
        rhs = 0.5 * outer(R.values[j], R.values[j])
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


# ------------------------------------------------------------------ brackets


def test_bracket_zero_at_origin():
    rng = np.random.default_rng(7)
    R = random_rough_path(rng)
    assert np.array_equal(bracket_one_param(R, 0), np.zeros((R.dim, R.dim)))


def test_bracket_definition_agreement():
    rng = np.random.default_rng(8)
    R = random_rough_path(rng, n=16)
    for j in (1, 7, 16):
        direct = outer(R.values[j] - R.values[0], R.values[j] - R.values[0]) - 2 * sym(
            second_level(R, 0, j)
        )
        np.testing.assert_allclose(bracket_one_param(R, j), direct, atol=1e-12)
    for i, j in [(2, 9), (0, 16), (5, 5)]:
        direct = outer(R.values[j] - R.values[i], R.values[j] - R.values[i]) - 2 * sym(
            second_level(R, i, j)
        )
        np.testing.assert_allclose(bracket_two_param(R, i, j), direct, atol=1e-12)


def test_bracket_additivity():
    # Additivity holds by construction (differences of one shared
    # one-parameter table); in floats it is exact up to one rounding per add.
    rng = np.random.default_rng(9)
    R = random_rough_path(rng, n=24)
    ulp = 4 * np.finfo(float).eps * float(np.max(np.abs(R.bracket_path())))
    for i, j, k in [(0, 5, 11), (2, 10, 24), (1, 3, 4)]:
        lhs = bracket_two_param(R, i, j) + bracket_two_param(R, j, k)
        rhs = bracket_two_param(R, i, k)
        np.testing.assert_allclose(lhs, rhs, atol=ulp)


def test_left_point_blocks_bracket_equals_quadratic_variation():
    # One-dimensional left-point enhancement over a refining inner grid:
    # the bracket telescopes to the realized quadratic variation.
    rng = np.random.default_rng(10)
    q, n = 8, 32
    db = rng.standard_normal((n, q)) * 0.1
    cells = db.reshape(n, q)
    prefix = np.cumsum(cells, axis=1) - cells
    blocks = np.einsum("kj,kj->k", prefix, cells)[:, None, None]
    values = np.zeros((n + 1, 1))
    values[1:] = cells.sum(axis=1).cumsum()[:, None]
    R = RoughPath(TimeGrid.uniform(1.0, n), values, blocks)
    qv = float((db**2).sum())
    assert bracket_one_param(R, n)[0, 0] == pytest.approx(qv, abs=1e-12)


# ------------------------------------------------------------------ geometricity


def test_is_weakly_geometric_detects_bracket():
    g = TimeGrid.uniform(1.0, 4)
    values = np.zeros((5, 1))
    values[:, 0] = g.times
    # blocks with a symmetric excess: not geometric
    blocks = 0.5 * np.full((4, 1, 1), (0.25) ** 2) + 0.01
    R = RoughPath(g, values, blocks)
    assert not is_weakly_geometric(R, 1e-3)
    assert is_weakly_geometric(R, 1.0)


# ------------------------------------------------------------------ seminorm / metric


def test_rough_metric_identity_and_symmetry():
    rng = np.random.default_rng(11)
    R1 = random_rough_path(rng)
    R2 = random_rough_path(rng)
    R3 = random_rough_path(rng)
    assert rough_metric(R1, R1, 0.5) == 0.0
    d12 = rough_metric(R1, R2, 0.5)
    d21 = rough_metric(R2, R1, 0.5)
    assert d12 == pytest.approx(d21, rel=1e-12)
    d13 = rough_metric(R1, R3, 0.5)
    d23 = rough_metric(R2, R3, 0.5)
    assert d13 <= d12 + d23 + 1e-12


def test_rough_metric_requires_shared_grid():
    rng = np.random.default_rng(12)
    R1 = random_rough_path(rng, n=8)
    R2 = random_rough_path(rng, n=16)
    with pytest.raises(GridError):
        rough_metric(R1, R2, 0.5)
    with pytest.raises(GridError):
        rough_seminorm(R1, 0.6)


def test_supremum_bound_from_norm():
    # max_k |X_k| + max_{i<j} |XX_{i,j}| <= (1 + T^a + T^{2a}) |X|_a
    rng = np.random.default_rng(13)
    for _ in range(5):
        R = random_rough_path(rng, n=24)
        alpha = 0.45
        T = R.times[-1]
        supx = float(np.max(np.linalg.norm(R.values, axis=1)))
        supxx = max(
            float(np.linalg.norm(second_level(R, i, j)))
            for i in range(len(R.grid))
            for j in range(i + 1, len(R.grid))
        )
        bound = (1 + T**alpha + T ** (2 * alpha)) * rough_norm(R, alpha)
        assert supx + supxx <= bound + 1e-10


def test_rough_seminorm_level1_matches_path_seminorm():
    rng = np.random.default_rng(14)
    R = random_rough_path(rng, n=16)
    zero_blocks = RoughPath(R.grid, np.array(R.values), np.zeros_like(R.blocks))
    semi = rough_seminorm(zero_blocks, 0.5)
    # with zero blocks the level-2 part comes only from the cross outer term
    assert semi >= holder_seminorm(R.path(), 0.5)


# ------------------------------------------------------------------ reconstruction


def test_reconstruction_from_initial_levels():
    rng = np.random.default_rng(15)
    R = random_rough_path(rng, n=40)
    rebuilt = RoughPath.from_initial_levels(R.grid, np.array(R.values), R.initial_levels())
    np.testing.assert_allclose(rebuilt.blocks, R.blocks, atol=1e-12)


# ------------------------------------------------------------------ raw fields


def test_raw_level2_promotion():
    rng = np.random.default_rng(16)
    R = random_rough_path(rng, n=12)
    raw = RawLevel2(R.path(), full_field(R))
    assert raw.max_defect() <= 1e-12
    promoted = raw.promote(tol=1e-10)
    np.testing.assert_allclose(promoted.blocks, R.blocks, atol=1e-13)

    bad_field = full_field(R)
    bad_field[2, 9] += 0.5
    bad = RawLevel2(R.path(), bad_field)
    assert bad.max_defect() > 1e-3
    with pytest.raises(ChenDefectError):
        bad.promote(tol=1e-10)


# ------------------------------------------------------------------ perturbation


def test_perturbed_lift_limits():
    rng = np.random.default_rng(17)
    R = random_rough_path(rng, n=16)
    G = SampledPath(R.grid, np.stack([np.sin(R.times), np.cos(R.times)], axis=1))
    same = perturbed_lift(R, G, 0.0)
    np.testing.assert_array_equal(same.values, R.values)
    np.testing.assert_array_equal(same.blocks, R.blocks)
    moved = perturbed_lift(R, G, 1e-3)
    assert max_chen_defect(moved) <= 1e-12
    assert np.max(np.abs(moved.values - R.values)) <= 1e-3 * (np.max(np.abs(G.values)) + 1e-9)


# ------------------------------------------------------------------ serialization


def test_json_round_trip():
    rng = np.random.default_rng(18)
    R = random_rough_path(rng, n=10, d=3)
    S = from_json_dict(to_json_dict(R))
    np.testing.assert_array_equal(S.times, R.times)
    np.testing.assert_array_equal(S.values, R.values)
    np.testing.assert_array_equal(S.blocks, R.blocks)


def test_restrict_keeps_absolute_times():
    rng = np.random.default_rng(19)
    R = random_rough_path(rng, n=16)
    W = R.restrict(4, 12)
    assert W.times[0] == R.times[4]
    np.testing.assert_array_equal(W.blocks, R.blocks[4:12])
    np.testing.assert_allclose(
        second_level(W, 0, 8), second_level(R, 4, 12), atol=1e-12
    )


def test_csv_exports(tmp_path):
    from roughpaths.rough import brackets_to_csv, defect_scan_to_csv

    rng = np.random.default_rng(20)
    R = random_rough_path(rng, n=12)
    bpath = tmp_path / "brackets.csv"
    brackets_to_csv(R, bpath)
    lines = bpath.read_text().splitlines()
    assert lines[0] == "t,b11,b12,b21,b22"
    assert len(lines) == 14
    dpath = tmp_path / "defects.csv"
    defect_scan_to_csv(R, dpath, n_samples=50)
    rows = dpath.read_text().splitlines()
    assert rows[0] == "i,u,j,t_i,t_u,t_j,defect"
    defects = [float(r.split(",")[-1]) for r in rows[1:]]
    assert max(defects) <= 1e-12


def test_json_file_round_trip_with_metadata(tmp_path):
    from roughpaths.rough import load_json, save_json

    rng = np.random.default_rng(21)
    R = random_rough_path(rng, n=6)
    fn = tmp_path / "rough.json"
    save_json(R, fn, metadata={"seed": 3})
    S = load_json(fn)
    np.testing.assert_array_equal(S.values, R.values)
    np.testing.assert_array_equal(S.blocks, R.blocks)


def test_load_json_rejects_garbage(tmp_path):
    from roughpaths.errors import DataError
    from roughpaths.rough import load_json

    fn = tmp_path / "bad.json"
    fn.write_text("{not json")
    with pytest.raises(DataError):
        load_json(fn)
    fn.write_text('{"d": 2, "times": [0.0, 1.0], "X": [[0.0], [1.0]], "blocks": []}')
    with pytest.raises(DataError):
        load_json(fn)
