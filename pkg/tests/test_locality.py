import json
import random

import numpy as np
import pytest

from qca_lab.core import EMPTY, Config, configs_in_window, minkowski, step
from qca_lab.errors import BobCellEqual, InputError, RegionTooLarge, RuleNotInjective, RuleReversible, WindowTooLarge, WindowTooSmall
from qca_lab.library import BINARY, and_rule, from_number, identity, negated_shift, shift, xor
from qca_lab.locality import (
    LocalOperator,
    check_localized,
    conjugate_local_operator,
    controlled_phase,
    falsify_uniform_locality,
    certified_neighborhood,
    required_cells,
    signalling_experiment,
    single_sided_witness_search,
    verify_locality,
)
from qca_lab.quantum import make_superposition

RULE_86 = from_number(86, (-1, 0, 1))
RULE_30 = from_number(30, (-1, 0, 1))
BLOCK = Config(0, "1" * 12)


def random_op(rng, dim):
    return np.array([[complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(dim)] for _ in range(dim)])


def tensor_with_identity(op, region, window, q="0"):
    """``op (x) Id`` written out over the window's configurations."""
    cs = list(configs_in_window(BINARY, window))
    words = list(BINARY.words(len(region)))
    outside = [j for j in window if j not in region]
    m = np.zeros((len(cs), len(cs)), dtype=complex)
    for i, u in enumerate(cs):
        for j, v in enumerate(cs):
            if u.restrict(outside, q) == v.restrict(outside, q):
                m[i, j] = op[words.index(u.restrict(region, q)), words.index(v.restrict(region, q))]
    return m


class TestConjugation:
    def test_identity_rule(self):
        rng = random.Random(0)
        op = LocalOperator((1,), random_op(rng, 2))
        m = conjugate_local_operator(identity(), op, range(4)).toarray()
        assert np.allclose(m, tensor_with_identity(op.matrix, [1], range(4)))

    def test_shift_moves_region(self):
        # F(u) restricted to cell 0 is u restricted to cell 1
        rng = random.Random(1)
        op = LocalOperator((0,), random_op(rng, 2))
        m = conjugate_local_operator(shift(), op, range(0, 4)).toarray()
        assert np.allclose(m, tensor_with_identity(op.matrix, [1], range(0, 4)))

    def test_xor_projector(self):
        op = LocalOperator.unit((0,), BINARY, "1", "1")
        window = range(-2, 3)
        m = conjugate_local_operator(xor(), op, window).toarray()
        cs = list(configs_in_window(BINARY, window))
        want = np.diag([1.0 if step(xor(), u).at(0, "0") == "1" else 0.0 for u in cs])
        assert np.allclose(m, want)
        assert np.trace(m) == 16

    def test_window_must_cover_neighborhood(self):
        op = LocalOperator.unit((2,), BINARY, "1", "1")
        with pytest.raises(WindowTooSmall):
            conjugate_local_operator(xor(), op, range(0, 3))

    def test_window_cap(self, monkeypatch):
        op = LocalOperator.unit((0,), BINARY, "1", "1")
        with pytest.raises(WindowTooLarge):
            conjugate_local_operator(xor(), op, range(0, 5), cap=16)
        monkeypatch.setenv("QCA_MAX_WINDOW", "16")
        with pytest.raises(WindowTooLarge):
            conjugate_local_operator(xor(), op, range(0, 5))


class TestCheckLocalized:
    def test_tensor_product(self):
        rng = random.Random(2)
        op = random_op(rng, 4)
        m = tensor_with_identity(op, [0, 2], range(-1, 3))
        assert check_localized(m, [0, 2], range(-1, 3), BINARY) == (True, None)

    def test_swap_is_not_single_cell(self):
        # swapping cells 0 and 1 on a two-cell window
        perm = [0, 2, 1, 3]
        swap = np.eye(4)[perm]
        ok, witness = check_localized(swap, [0], [0, 1], BINARY)
        assert not ok
        assert witness.reason == "links words differing off the region"
        assert {witness.row, witness.col} == {"01", "10"}

    def test_dependence_on_outside(self):
        # a controlled-Z acts differently on cell 0 depending on cell 1
        cz = np.diag([1, 1, 1, -1])
        ok, witness = check_localized(cz, [0], [0, 1], BINARY)
        assert not ok and witness.reason == "entry depends on the outside part"

    def test_xor_pulls_back_nearby(self):
        op = LocalOperator.unit((0,), BINARY, "1", "1")
        m = conjugate_local_operator(xor(), op, range(-2, 3))
        assert check_localized(m, minkowski([0], [-1, 0, 1]), range(-2, 3), BINARY)[0]
        assert not check_localized(m, [0], range(-2, 3), BINARY)[0]

    def test_region_outside_window(self):
        with pytest.raises(InputError):
            check_localized(np.eye(2), [5], [0], BINARY)


class TestVerifyLocality:
    def test_identity(self):
        assert verify_locality(identity(), [0], [0]).verdict == "verified"

    def test_shift(self):
        assert verify_locality(shift(), [0], [1]).verdict == "verified"
        assert verify_locality(shift(), [0], [0]).verdict == "violated"

    def test_xor_too_small(self):
        report = verify_locality(xor(), [0, 1], [0])
        assert report.verdict == "violated"
        assert report.violation["operator"][0] in ("00", "01", "10", "11")

    def test_xor_witness_region(self):
        w = falsify_uniform_locality(xor(), [-1, 0, 1])
        report = verify_locality(xor(), w.image_diff, [-1, 0, 1])
        assert report.verdict == "violated"

    @pytest.mark.parametrize("rule", [identity(), shift(), negated_shift()], ids=lambda r: r.name)
    def test_certified_neighborhood_verifies(self, rule):
        for region in ([0], [0, 1], [-1, 1]):
            n = certified_neighborhood(rule, region)
            need = required_cells(rule, region, n)
            window = range(need[0] - 1, need[-1] + 1)
            assert verify_locality(rule, region, n, window).verdict == "verified"

    def test_certified_neighborhood_shape(self):
        assert certified_neighborhood(identity(), [0]) == (0,)
        # {0, 1} minus itself is [-1, 1]; the shift's inverse neighborhood is [0, 1]
        assert certified_neighborhood(shift(), [0]) == (-1, 0, 1, 2)

    def test_inconclusive_on_cap(self):
        report = verify_locality(xor(), [0], [-1, 0, 1], cap=8)
        assert report.verdict == "inconclusive"

    def test_window_too_small(self):
        with pytest.raises(WindowTooSmall):
            verify_locality(xor(), [0], [-1, 0, 1], window=[-1, 0, 1])

    @pytest.mark.parametrize("rule, region, n", [
        (xor(), [0], [-1, 0, 1]),
        (xor(), [0, 1], [0]),
        (shift(), [0], [1]),
        (shift(), [0], [0]),
        (RULE_86, [0], [-1, 0, 1]),
    ], ids=["xor-ok", "xor-small", "shift-ok", "shift-wrong", "86"])
    def test_window_stability(self, rule, region, n):
        base = verify_locality(rule, region, n)
        wider = verify_locality(rule, region, n, window=base.window + (base.window[-1] + 1,))
        assert not (base.verdict == "verified" and wider.verdict == "violated")

    def test_report_json(self):
        d = verify_locality(xor(), [0, 1], [0]).as_dict()
        assert json.loads(json.dumps(d)) == d


class TestFalsifier:
    def test_xor_radius_three(self):
        w = falsify_uniform_locality(xor(), range(-3, 4))
        assert w.x == EMPTY
        assert set(w.y.word) == {"1"}
        assert w.image_diff == (w.y.offset - 1, w.y.offset + len(w.y.word) - 1)
        assert w.bob_cell not in minkowski(w.image_diff, range(-3, 4))
        assert w.reduction_residual <= 1e-9
        assert abs(w.evolved_distance - 1) <= 1e-9

    def test_block_grows_with_neighborhood(self):
        small = falsify_uniform_locality(xor(), range(-3, 4))
        large = falsify_uniform_locality(xor(), range(-6, 7))
        assert len(large.y.word) > len(small.y.word)
        assert large.reduction_residual <= 1e-9
        assert abs(large.evolved_distance - 1) <= 1e-9

    def test_block_is_minimal(self):
        # a shorter block leaves no cell outside A + N
        w = falsify_uniform_locality(xor(), range(-3, 4))
        n = len(w.y.word) - 1
        shorter = Config(0, "1" * n)
        a = (-1, n - 1)
        assert all(j in minkowski(a, range(-3, 4)) for j in range(n))
        assert step(xor(), shorter).support == (-1, n - 1)

    @pytest.mark.parametrize("rule", [identity(), shift(), negated_shift()], ids=lambda r: r.name)
    def test_reversible(self, rule):
        with pytest.raises(RuleReversible):
            falsify_uniform_locality(rule, [-1, 0, 1])

    def test_non_injective(self):
        with pytest.raises(RuleNotInjective):
            falsify_uniform_locality(and_rule(), [0])

    @pytest.mark.parametrize("k", range(1, 6))
    @pytest.mark.parametrize("rule", [RULE_86, RULE_30], ids=lambda r: r.name)
    def test_pumped(self, rule, k):
        w = falsify_uniform_locality(rule, range(-k, k + 1))
        assert w.construction.startswith("pumped")
        assert w.reduction_residual <= 1e-9
        assert w.evolved_distance >= 0.5


class TestSignalling:
    def test_controlled_phase(self):
        plus = make_superposition([(EMPTY, 1), (BLOCK, 1)])
        minus = controlled_phase(plus, 5, "1", BINARY)
        assert minus.allclose(make_superposition([(EMPTY, 1), (BLOCK, -1)]))
        assert controlled_phase(minus, 5, "1", BINARY).allclose(plus)

    def test_phase_skips_absent_symbol(self):
        s = make_superposition([(EMPTY, 1)])
        assert controlled_phase(s, 3, "1", BINARY).allclose(s)

    def test_worked_strings(self):
        r = signalling_experiment(xor(), EMPTY, BLOCK, 5, [-1, 11])
        assert abs(r.distance - 1) <= 1e-9
        assert abs(r.success_probability - 1) <= 1e-9

    def test_alice_far_away(self):
        r = signalling_experiment(xor(), EMPTY, BLOCK, 5, [30, 31])
        assert r.distance <= 1e-9
        assert abs(r.success_probability - 0.5) <= 1e-9
        assert np.allclose(r.sigma_plus.matrix, r.sigma_minus.matrix)

    def test_alice_on_agreeing_cells_near_bob(self):
        # F(x) and F(y) agree on cells 2..4, yet they sit next to Bob
        r = signalling_experiment(xor(), EMPTY, BLOCK, 5, [2, 3, 4])
        assert r.distance <= 1e-9

    def test_identity_does_not_signal(self):
        r = signalling_experiment(identity(), EMPTY, BLOCK, 5, [3, 4])
        assert r.distance <= 1e-9

    def test_bob_cell_equal(self):
        with pytest.raises(BobCellEqual):
            signalling_experiment(xor(), EMPTY, BLOCK, 20, [0])

    def test_alice_region_cap(self):
        with pytest.raises(RegionTooLarge):
            signalling_experiment(xor(), EMPTY, BLOCK, 5, range(13))

    def test_report_json(self):
        d = signalling_experiment(xor(), EMPTY, BLOCK, 5, [-1, 11]).as_dict()
        assert d["sigma_plus"]["order"] == ["00", "01", "10", "11"]
        assert json.loads(json.dumps(d)) == d


class TestSingleSided:
    @pytest.mark.parametrize("side", ["left", "right"])
    def test_xor_exhausted(self, side):
        assert single_sided_witness_search(xor(), side, 12) is None

    @pytest.mark.parametrize("rule", [identity(), shift()], ids=lambda r: r.name)
    def test_reversible_exhausted(self, rule):
        assert single_sided_witness_search(rule, "left", 12) is None
        assert single_sided_witness_search(rule, "right", 12) is None

    def test_non_open_rule(self):
        w = single_sided_witness_search(RULE_86, "left", 12)
        assert w is not None
        assert max(w.witness.diff_set) < w.witness.far_diff
        assert abs(w.signal.distance - 1) <= 1e-9
        assert single_sided_witness_search(RULE_86, "right", 12) is None

    def test_mirror_rule(self):
        w = single_sided_witness_search(RULE_30, "right", 12)
        assert w is not None and min(w.witness.diff_set) > w.witness.far_diff

    def test_bound_respected(self):
        assert single_sided_witness_search(RULE_86, "left", 1) is None

    def test_bad_side(self):
        with pytest.raises(InputError):
            single_sided_witness_search(xor(), "up", 3)

    def test_non_injective(self):
        with pytest.raises(RuleNotInjective):
            single_sided_witness_search(and_rule(), "left", 5)
