import json

import pytest

from diagprimes import sysmodel
from diagprimes.errors import DomainError, ParseError, ValidationError


def test_shape_and_invariants():
    s = sysmodel.make_system([[1, 1], [1, -1], [2, 1]], [1, 2])
    assert (s.s, s.t, s.K, s.k_max) == (3, 2, 3, 2)
    assert s.is_vinogradov
    flat = sysmodel.make_system([1, 1, -1, -1], [1])
    assert flat.t == 1 and flat.is_homogeneous_diagonal


def test_columns_reduced_by_gcd():
    s = sysmodel.make_system([2, 4, -2, 2], [1])
    assert s.column(0) == (1, 2, -1, 1)


@pytest.mark.parametrize("u,k,needle", [
    ([1, 0], [1], "u[1][0]"),
    ([[1, 1], [1, 1]], [2, 2], "duplicate"),
    ([], [1], "empty"),
    ([[1, 1], [1]], [1, 2], "row"),
])
def test_validation_errors(u, k, needle):
    with pytest.raises(ValidationError, match=None) as err:
        sysmodel.make_system(u, k)
    assert needle.split("[")[0] in str(err.value)


def test_thresholds():
    assert sysmodel.threshold_check(13, 6).meets
    assert not sysmodel.threshold_check(12, 6).meets


def test_local_solvability_examples(diagonal_pair, sum_of_squares):
    v = sysmodel.local_solvability(diagonal_pair, 3)
    assert v.solvable and sysmodel.check_congruences(diagonal_pair, v.witness, 3)
    assert sysmodel.local_solvability(sysmodel.make_system([1, 1], [1]), 2).solvable
    assert sysmodel.local_solvability(sum_of_squares, 3).solvable is False
    with pytest.raises(DomainError):
        sysmodel.local_solvability(diagonal_pair, 9)


def test_local_solvability_matches_enumeration():
    s = sysmodel.make_system([[1, 1], [1, -1], [2, 1], [-1, 1], [-3, -2]], [1, 2])
    for p in (2, 3, 5, 7, 11):
        brute = next(sysmodel.enumerate_unit_solutions(s, p), None)
        v = sysmodel.local_solvability(s, p)
        assert v.solvable == (brute is not None)
        if v.solvable:
            assert sysmodel.check_congruences(s, v.witness, p)


def test_real_probe(diagonal_pair, four_prime, sum_of_squares):
    assert sysmodel.real_solution_probe(diagonal_pair).found
    assert sysmodel.real_solution_probe(four_prime).found
    assert not sysmodel.real_solution_probe(sum_of_squares, attempts=8).found


def test_config_roundtrip_and_defaults():
    cfg = sysmodel.parse_config(json.dumps({"u": [1, 1, -1, -1], "k": [1], "P": [100, 1000]}))
    assert set(cfg.defaulted) == {"delta", "q_cut", "gamma_cut", "samples", "seed", "tolerance"}
    again = sysmodel.parse_config(sysmodel.emit_config(cfg))
    assert again == cfg
    assert cfg.delta_within_recommended


@pytest.mark.parametrize("doc,path", [
    ({"u": [1, -1], "k": [1], "P": 10, "bogus": 1}, "bogus"),
    ({"u": [1, -1], "k": [1]}, "P"),
    ({"u": [1, "x"], "k": [1], "P": 10}, "u[1][0]"),
    ({"u": [1, -1], "k": [1], "P": [10, -3]}, "P[1]"),
    ({"u": [1, -1], "k": [1], "P": 10, "delta": 1.5}, "delta"),
    ({"u": [1, -1], "k": [1], "P": 10, "seed": 2**64}, "seed"),
])
def test_config_errors_name_the_field(doc, path):
    with pytest.raises(ParseError) as err:
        sysmodel.config_from_dict(doc)
    assert err.value.path == path


def test_malformed_json():
    with pytest.raises(ParseError):
        sysmodel.parse_config("{not json")
