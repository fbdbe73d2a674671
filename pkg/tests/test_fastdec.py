import numpy as np
import pytest

from fdrelay.fastdec import (
    RankDeficientError,
    auto_partition,
    block_pattern_report,
    certify,
    complex_basis_group_check,
    complex_basis_partition,
    complexity_exponent,
    forced_block_pattern,
    format_percent,
    ordered_exponent,
    orthogonality_matrix,
    pattern_stability_check,
    qr_structure,
    realize,
    reduction_ratio,
    vectorize,
    verify_partition,
    zero_pattern,
)
from fdrelay.partition import GroupPartition, PartitionError
from fdrelay.stcodes import encode, get_code


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def test_realize_shapes_and_columns():
    c3 = get_code("C3")
    L = realize(c3, np.eye(4))
    assert L.B.shape == (16, 4)
    assert np.array_equal(L.B[:, 0], vectorize(c3.generators[0]))
    H = _cn(np.random.default_rng(0), (2, 6))
    assert realize(get_code("C1"), H).B.shape == (24, 24)
    with pytest.raises(ValueError):
        realize(c3, np.eye(3))


def test_vectorization_is_linear():
    c = get_code("C2")
    rng = np.random.default_rng(1)
    H = _cn(rng, (2, 4))
    g = rng.integers(-3, 4, 16)
    assert np.allclose(realize(c, H).B @ g, vectorize(H @ encode(c, g)))


def test_vectorize_order():
    Y = np.array([[1 + 2j, 3], [4j, 5]])
    assert vectorize(Y).tolist() == [1, 0, 3, 5, 2, 4, 0, 0]


@pytest.mark.parametrize("name", ["C1", "C2", "C3", "C4"])
def test_m_symmetric_positive_diagonal(name):
    c = get_code(name)
    M = orthogonality_matrix(c, _cn(np.random.default_rng(2), (c.n_r, c.n_t))).M
    assert np.allclose(M, M.T)
    assert np.diag(M).min() > 0


@pytest.mark.parametrize("name,block", [("C1", 3), ("C2", 2)])
def test_block_pattern(name, block):
    mask = orthogonality_matrix(get_code(name)).zero_mask()
    forced = forced_block_pattern(block)
    assert mask[forced].all()
    rep = block_pattern_report(mask, block)
    assert rep["pass"]


def test_block_pattern_shape():
    p = forced_block_pattern(1, 8)
    assert p[:4, :4].sum() == 12 and not p[4:].any() and not p[:, 4:].any()


def test_zero_pattern_basics():
    assert (zero_pattern(np.diag([1.0, 2.0, 3.0])) == ~np.eye(3, dtype=bool)).all()
    assert not zero_pattern(np.ones((3, 3))).any()
    with pytest.raises(ValueError):
        zero_pattern(np.eye(2), 0)


def test_c3_inner_form_mixed_pairs():
    # the trace form vanishes between X(1,0)/X(i,0) and X(0,1)/X(0,i) at H = I
    mask = orthogonality_matrix(get_code("C3"), form="inner").zero_mask()
    assert mask[0, 1] and mask[2, 3]
    assert not mask[0, 2] and not mask[1, 3]
    B = realize(get_code("C3")).B
    G = B.T @ B
    assert np.abs(G - np.diag(np.diag(G))).max() < 1e-12


def test_verify_partition():
    c = get_code("C1")
    om = orthogonality_matrix(c)
    assert verify_partition(om, c.declared_partition)
    assert verify_partition(om, GroupPartition.trivial(24))
    # swap Γ_{1,3} and Γ_{2,3} between the q1 and q2 groups
    wrong = GroupPartition.make([(0, 1, 5), (3, 4, 2), (6, 7, 8), (9, 10, 11)], range(12, 24))
    assert om.M[0, 2] > 1e-6 * om.M.max()
    assert om.M[0, 3] <= 1e-9 * om.M.max()
    assert not verify_partition(om, wrong)
    with pytest.raises(PartitionError):
        verify_partition(om, GroupPartition.make([(0, 1)], range(1, 24)))


def test_complexity_exponents():
    assert complexity_exponent(get_code("C1").declared_partition) == 15
    assert complexity_exponent(get_code("C2").declared_partition) == 10
    assert complexity_exponent(GroupPartition.trivial(7)) == 7


def test_auto_partition_cases():
    dense = np.eye(5, dtype=bool)
    p = auto_partition(dense)
    assert len(p.conditioned) == 4 and p.exponent() == 5
    mask = np.ones((5, 5), dtype=bool)
    mask[:2, :2] = np.eye(2, dtype=bool)
    mask[2:, 2:] = np.eye(3, dtype=bool)
    p = auto_partition(mask)
    assert p.groups == ((0, 1), (2, 3, 4)) and p.conditioned == ()
    c2 = orthogonality_matrix(get_code("C2"))
    p = auto_partition(c2.zero_mask())
    assert p.exponent() <= 10 and verify_partition(c2, p)


def test_qr_structure():
    R = qr_structure(np.diag([2.0, 3.0, 1.0]))
    assert np.allclose(R.R, np.diag([2, 3, 1])) and R.delta_size == 3
    B = np.random.default_rng(0).standard_normal((6, 3))
    q = qr_structure(B)
    assert (np.diag(q.R) > 0).all() and np.allclose(q.Q @ q.R, B)
    with pytest.raises(RankDeficientError):
        qr_structure(np.ones((4, 2)))


def test_c4_delta_block_random_channels():
    c = get_code("C4")
    rng = np.random.default_rng(4)
    for _ in range(20):
        q = qr_structure(realize(c, _cn(rng, (2, 4))))
        assert q.delta_size >= 2


def test_c3_delta_block_real_channels():
    c = get_code("C3")
    rng = np.random.default_rng(4)
    for _ in range(20):
        assert qr_structure(realize(c, rng.standard_normal((1, 4)))).delta_size >= 2


def test_r_zero_blocks_follow_partition():
    c = get_code("C2")
    part = c.declared_partition
    order = part.ordering()
    H = _cn(np.random.default_rng(6), (2, 4))
    R = qr_structure(realize(c, H).B[:, order]).R
    top = R[:8, :8]
    for a in range(4):
        for b in range(4):
            if a != b:
                assert np.abs(top[2 * a : 2 * a + 2, 2 * b : 2 * b + 2]).max() <= 1e-9 * np.abs(R).max()


def test_pattern_stability():
    assert pattern_stability_check(get_code("C1"), 10, seed=1)
    assert pattern_stability_check(get_code("C2"), 10, seed=1, n_r=2)
    with pytest.raises(ValueError):
        pattern_stability_check(get_code("C2"), 0)


def test_complex_basis():
    assert complex_basis_group_check()
    p = complex_basis_partition()
    assert p.groups == ((0, 1), (2, 3), (4, 5), (6, 7))
    assert p.exponent() == 2


def test_reduction_ratio_formatting():
    assert format_percent(reduction_ratio(3, 8)) == "62.5%"
    assert format_percent(reduction_ratio(7, 16)) == "56.25%"
    assert ordered_exponent(4, 2) == 3 and ordered_exponent(8, 2) == 7


def test_certify_reports():
    d = certify(get_code("C2"), trials=5).to_dict()
    assert d["pass"] and d["exponent"] == 10
    assert set(d) >= {"code", "ordering", "mask", "partition", "exponent", "stability_trials", "pass"}
    assert len(d["mask"]) == 16 and set("".join(d["mask"])) <= {"0", "1"}
    shuffled = certify(get_code("C2"), trials=5, ordering=np.random.default_rng(1).permutation(16))
    assert shuffled.checks.get("auto_partition") and shuffled.exponent >= 10
