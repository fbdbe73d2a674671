import json
import math

import numpy as np
import pytest

from fdrelay.fastdec import vectorize
from fdrelay.numfield import algebraic_norm, apply_auto, embed, make_field, FieldId
from fdrelay.partition import GroupPartition, PartitionError
from fdrelay.stcodes import (
    CODE_NAMES,
    CodeFormatError,
    SearchGuardError,
    UnsupportedCodeError,
    c3_element,
    code_from_dict,
    code_to_dict,
    det_gram,
    encode,
    exact_block_det,
    get_code,
    load_code,
    min_det_search,
    nvd_residue_certificate,
    pam_alphabet,
)


def _rank_matrix(code):
    return np.column_stack([vectorize(B) for B in code.generators])


@pytest.mark.parametrize("name,k,n_t,T,rate", [("C1", 24, 6, 6, 4), ("C2", 16, 4, 4, 4), ("C3", 4, 4, 2, 2), ("C4", 8, 4, 2, 4)])
def test_sizes_and_rate(name, k, n_t, T, rate):
    c = get_code(name)
    assert (c.k, c.n_t, c.T, c.rate) == (k, n_t, T, rate)
    assert np.linalg.svd(_rank_matrix(c), compute_uv=False).min() > 1e-8


def test_aliases():
    assert get_code("C1_6x6") is get_code("C1")
    with pytest.raises(CodeFormatError):
        get_code("C9")


def test_generators_read_only():
    c = get_code("C3")
    with pytest.raises(ValueError):
        c.generators[0][0, 0] = 5


def test_c1_quaternion_blocks():
    c = get_code("C1")
    assert np.allclose(c.generators[0][:2, :2], np.eye(2))
    # lexicographic order: e2 is q1 * (zeta + zeta^-1), e4 is q2
    z = 2 * math.cos(2 * math.pi / 7)
    assert np.allclose(encode(c, np.eye(24)[1])[:2, :2], z * np.eye(2))
    assert np.allclose(encode(c, np.eye(24)[3])[:2, :2], np.diag([1j, -1j]))
    assert np.allclose(c.generators[6][:2, :2], math.sqrt(11) * np.array([[0, 1j], [1j, 0]]))
    # i+4 block is sqrt(-7) times block i
    assert np.allclose(c.generators[12], 1j * math.sqrt(7) * c.generators[0])


def test_c2_layout():
    c = get_code("C2")
    assert np.allclose(encode(c, np.zeros(16)), np.zeros((4, 4)))
    assert np.allclose(c.generators[1][:2, :2], math.sqrt(31) * np.eye(2))
    assert np.allclose(c.generators[1][2:, 2:], -math.sqrt(31) * np.eye(2))
    assert np.allclose(c.generators[8], 1j * c.generators[0])


def test_c3_generators():
    c = get_code("C3")
    assert np.allclose(c.generators[0], [[1, 0], [1, 0], [0, 1], [0, 1]])
    assert abs(c.generators[2][0, 0] - np.exp(1j * np.pi / 4)) < 1e-14
    X = encode(c, (1, 0, 1, 0))
    x = c3_element((1, 0, 1, 0))
    assert abs(X[0, 0] - embed(x)) < 1e-14
    assert abs(X[2, 1] - embed(apply_auto(x, "tau"))) < 1e-14
    assert np.allclose(encode(c, np.eye(4)[0]), c.generators[0])


def test_c4_gram_diagonal():
    c = get_code("C4")
    V = _rank_matrix(c)
    G = V.T @ V
    assert np.abs(G - np.diag(np.diag(G))).max() < 1e-9
    assert np.allclose(encode(c, np.zeros(8)), 0)


def test_galois_block_consistency():
    for name, auto in (("C1", "tau"), ("C2", "tau")):
        c = get_code(name)
        nb = c.n_t // 2
        for E in c.exact_generators:
            for j in range(nb - 1):
                blk = [[E.entries[2 * j + r][2 * j + s] for s in range(2)] for r in range(2)]
                nxt = np.array([[embed(apply_auto(x, auto)) for x in row] for row in blk])
                rad = np.sqrt(np.array(E.radicals)[2 * j : 2 * j + 2, 2 * j : 2 * j + 2])
                got = E.to_complex()[2 * j + 2 : 2 * j + 4, 2 * j + 2 : 2 * j + 4]
                assert np.abs(got - nxt * rad).max() < 1e-10


def test_det_gram_examples():
    c = get_code("C3")
    assert det_gram(c, (0, 0, 0, 0)) == 0
    assert abs(det_gram(c, (1, 0, 0, 0)) - 4) < 1e-12
    c1 = get_code("C1")
    g = np.random.default_rng(0).integers(-1, 2, 24)
    assert abs(det_gram(c1, g) - abs(np.linalg.det(encode(c1, g))) ** 2) < 1e-6 * det_gram(c1, g)
    with pytest.raises(ValueError):
        det_gram(c, (1, 2))


def test_c3_det_is_four_times_norm():
    c = get_code("C3")
    rng = np.random.default_rng(3)
    for _ in range(200):
        g = rng.integers(-8, 9, 4)
        if not g.any():
            continue
        exact = 4 * algebraic_norm(c3_element(g))
        assert abs(det_gram(c, g) - float(exact)) <= 1e-6 * float(exact)


def test_c1_determinant_in_q_sqrt_minus7():
    c = get_code("C1")
    L = make_field(FieldId.Q_I_ZETA7)
    z = L.gen("zeta7")
    omega = 1 + z + z**2 + z**4  # (1 + sqrt(-7)) / 2
    w = complex(0.5, math.sqrt(7) / 2)
    A = np.array([[1.0, w.real], [0.0, w.imag]])
    rng = np.random.default_rng(5)
    dense = [rng.integers(-2, 3, 24) for _ in range(20)]
    sparse = []
    for _ in range(20):
        g = np.zeros(24, dtype=int)
        g[rng.choice(24, 2, replace=False)] = rng.choice([-2, -1, 1, 2], 2)
        sparse.append(g)
    for g in dense + sparse:
        ed = exact_block_det(c, g)
        coords = ed.coords
        b = coords[L.basis.index("zeta7")]
        a = coords[0] - b
        assert a.denominator == b.denominator == 1
        assert ed == omega * int(b) + int(a)
        d = np.linalg.det(encode(c, g))
        sol = np.linalg.solve(A, [d.real, d.imag])
        assert np.abs(sol - [float(a), float(b)]).max() <= 1e-9 * max(1.0, abs(d))
        if abs(d) < 1e6:
            assert np.abs(sol - np.round(sol)).max() < 1e-6


def test_min_det_c3_exhaustive():
    rep = min_det_search(get_code("C3"), 1, "exhaustive", keep_values=True)
    assert rep.count == 80
    assert abs(rep.min_value - 4) < 1e-9
    v = rep.values / 4
    assert np.abs(v - np.round(v)).max() < 1e-6


def test_min_det_c1_sparse():
    rep = min_det_search(get_code("C1"), 1, "sparse", weight=1)
    assert rep.count == 48
    assert rep.min_value > 0


def test_sampled_count_and_determinism():
    c = get_code("C4")
    a = min_det_search(c, 2, "sampled", n=1000, seed=7)
    b = min_det_search(c, 2, "sampled", n=1000, seed=7)
    assert a.count == 1000 and a.to_dict() == b.to_dict()


def test_search_guard():
    with pytest.raises(SearchGuardError):
        min_det_search(get_code("C1"), 1, "exhaustive")


def test_argmin_tie_break_lexicographic():
    rep = min_det_search(get_code("C3"), 1, "exhaustive")
    # x = -1 - i - zeta8 is the lexicographically first unit-norm multiple found
    assert rep.argmin == (-1, -1, -1, 0)


def test_c4_full_diversity_sample():
    c = get_code("C4")
    rng = np.random.default_rng(11)
    G = rng.integers(-4, 5, (10_000, 8))
    G = G[G.any(axis=1)]
    from fdrelay.stcodes import _det_gram_batch

    assert _det_gram_batch(c.stack, G).min() > 1e-9


def test_residue_certificates():
    assert nvd_residue_certificate(get_code("C1"))
    assert nvd_residue_certificate("C2")
    for name in ("C3", "C4"):
        with pytest.raises(UnsupportedCodeError):
            nvd_residue_certificate(name)


def test_pam_alphabet():
    assert pam_alphabet(4) == (-3, -1, 1, 3)
    with pytest.raises(ValueError):
        pam_alphabet(3)


def test_json_round_trip(tmp_path):
    for name in CODE_NAMES:
        c = get_code(name)
        d = json.loads(json.dumps(code_to_dict(c)))
        back = code_from_dict(d)
        assert back.k == c.k and back.declared_partition == c.declared_partition
        assert all(np.array_equal(a, b) for a, b in zip(back.generators, c.generators))
    p = tmp_path / "c2.json"
    p.write_text(json.dumps(code_to_dict(get_code("C2"))))
    assert load_code(str(p)).k == 16


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("generators"),
        lambda d: d.update(k=3),
        lambda d: d.update(n_t=5),
        lambda d: d.update(partition={"groups": [[0, 1]], "conditioned": [1, 2, 3]}),
    ],
)
def test_malformed_json(mutate):
    d = code_to_dict(get_code("C3"))
    mutate(d)
    with pytest.raises(CodeFormatError):
        code_from_dict(d)


def test_load_code_errors(tmp_path):
    with pytest.raises(CodeFormatError):
        load_code(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    with pytest.raises(CodeFormatError):
        load_code(str(bad))


def test_partition_helpers():
    p = get_code("C1").declared_partition
    assert p.exponent() == 15
    assert GroupPartition.from_dict(p.to_dict()) == p
    assert GroupPartition.trivial(5).exponent() == 5
    with pytest.raises(PartitionError):
        GroupPartition.make([(0, 1), (1, 2)]).validate(3)
