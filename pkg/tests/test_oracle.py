from __future__ import annotations

import math
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from chiplink import Chiplet, DomainError, FrameConfig, LinkRecord, Net, RsCode, Status, build_problem, solve_exact, symbol_error_prob
from chiplink.assignment import NetAssignment
from chiplink.oracle import (
    PrecisionConfig,
    brute_force_assign,
    check_constraints,
    exact,
    hp_binom_head,
    hp_binom_tail,
    hp_post_fec_ber,
    random_problem,
    relative_error,
    simulate_frames,
    to_decimal,
)
from chiplink.reliability import block_fail_prob, post_fec_ber
from chiplink.verify import monte_carlo_agreement, solver_equivalence, stability_gate


def test_exact_conversion():
    assert exact(0.5) == Fraction(1, 2)
    assert exact("1e-4") == Fraction(1, 10000)
    assert exact(1e-4) != Fraction(1, 10000)  # floats convert without rounding
    with pytest.raises(DomainError):
        exact(1.5)


def test_precision_floor():
    assert PrecisionConfig().working_digits == 50
    with pytest.raises(DomainError):
        PrecisionConfig(working_digits=30)


def test_binom_tail_anchors():
    assert hp_binom_tail(86, 0, 21) == 0
    assert hp_binom_tail(2, Fraction(1, 2), 0) == Fraction(3, 4)
    assert hp_binom_tail(5, Fraction(1, 3), 5) == 0
    assert hp_binom_head(5, Fraction(1, 3), -1) == 0


def test_binom_tail_against_main_implementation():
    q = 1 - (1 - exact(1e-3)) ** 8
    ref = hp_binom_tail(86, q, 21)
    got = block_fail_prob(symbol_error_prob(1e-3), RsCode(86, 44))
    assert relative_error(got, ref) < 1e-12
    assert str(to_decimal(ref, 60))[:6] == str(to_decimal(ref, 50))[:6]


@given(st.integers(1, 90), st.fractions(0, 1, max_denominator=10**6), st.integers(-2, 92))
def test_head_plus_tail_is_one(n, p, t):
    assert hp_binom_tail(n, p, t) + hp_binom_head(n, p, t) == 1


def test_post_fec_reference_worst_case():
    ref = hp_post_fec_ber(1e-3, RsCode(86, 44))
    assert ref <= Fraction(1, 10**27)
    assert relative_error(post_fec_ber(1e-3, RsCode(86, 44)), ref) < 1e-12


def _link(name, energy, reach=100.0):
    return LinkRecord(name, reach, 7, 1e-15, "E", 1000.0, 1000.0, energy)


def test_brute_force_picks_cheaper():
    chips = [Chiplet("a", {"E": 10.0}), Chiplet("b", {"W": 10.0})]
    nets = [Net("n", (("a", "E"), ("b", "W")), 1.0, 1000.0)]
    # costs 3 and 5 at lambda_p = 1 once area is priced at ~0
    p = build_problem(chips, nets, [_link("five", 5.0), _link("three", 3.0)], 1.0, 1e12)
    sol = brute_force_assign(p)
    assert sol.choices() == ("three",)
    assert sol.objective_value == pytest.approx(3.0, rel=1e-9)


def test_brute_force_infeasible_and_bounds():
    chips = [Chiplet("a", {"E": 10.0}), Chiplet("b", {"W": 10.0})]
    nets = [Net("n", (("a", "E"), ("b", "W")), 500.0, 10.0)]
    assert brute_force_assign(build_problem(chips, nets, [_link("x", 1.0)], 1, 1)).status is Status.INFEASIBLE
    many = [Net(f"n{i}", (("a", "E"), ("b", "W")), 1.0, 1.0) for i in range(11)]
    with pytest.raises(DomainError):
        brute_force_assign(build_problem(chips, many, [_link("x", 1.0)], 1, 1))


def test_checker_flags_each_constraint():
    p = random_problem(3, 4, 3)
    sol = solve_exact(p)
    assert sol.status.has_solution and check_constraints(p, sol) == []
    rows = list(sol.assignments)
    # reach
    far = replace(p, nets=(replace(p.nets[0], distance_mm=1e6),) + p.nets[1:])
    assert any("reach" in v for v in check_constraints(far, sol))
    # width below the bandwidth requirement
    thin = replace(sol, assignments=(replace(rows[0], width_mm=rows[0].width_mm / 2),) + tuple(rows[1:]))
    assert check_constraints(p, thin)
    # a net left out and an unknown link
    assert check_constraints(p, replace(sol, assignments=tuple(rows[1:])))
    bogus = replace(sol, assignments=(replace(rows[0], link="nope"),) + tuple(rows[1:]))
    assert check_constraints(p, bogus)
    # shoreline overflow
    tiny = replace(p, chiplets=tuple(Chiplet(c.id, {e: 1e-6 for e, _ in c.edges}) for c in p.chiplets))
    assert any("shoreline" in v or "edge" in v for v in check_constraints(tiny, sol))


@given(st.integers(0, 10**6), st.sampled_from([1.0, 2.0, 3.0]))
def test_brute_force_passes_checker(seed, tightness):
    p = random_problem(seed, tightness=tightness)
    sol = brute_force_assign(p)
    if sol.status.has_solution:
        assert check_constraints(p, sol) == []


def test_random_problem_is_seeded():
    a, b = random_problem(11), random_problem(11)
    assert a.nets == b.nets and a.links == b.links and a.capacities == b.capacities


def test_simulation_edges():
    code, frame = RsCode(86, 72), FrameConfig()
    zero = simulate_frames(0.0, code, frame, 100)
    assert zero.block_failures == 0 and zero.frame_failures == 0
    one = simulate_frames(1.0, code, frame, 100)
    assert one.p_blk_fail == 1.0 and one.p_frame_fail == 1.0
    assert one.codewords_per_frame == math.ceil(272 / 72)
    with pytest.raises(DomainError):
        simulate_frames(1.5, code, frame)


def test_simulation_reproducible():
    a = simulate_frames(1e-2, RsCode(86, 72), FrameConfig(), 5000, seed=4)
    b = simulate_frames(1e-2, RsCode(86, 72), FrameConfig(), 5000, seed=4)
    assert a == b
    c = simulate_frames(1e-2, RsCode(86, 72), FrameConfig(), 5000, seed=5)
    assert c != a


def test_simulation_chunking_does_not_change_counts_scale():
    a = simulate_frames(2e-2, RsCode(86, 80), FrameConfig(), 4000, seed=1, chunk_frames=4000)
    b = simulate_frames(2e-2, RsCode(86, 80), FrameConfig(), 4000, seed=1, chunk_frames=500)
    # different draws, same distribution
    assert abs(a.p_blk_fail - b.p_blk_fail) < 6 * math.hypot(a.se_blk_fail, b.se_blk_fail) + 1e-12


def test_small_monte_carlo_agreement():
    res = monte_carlo_agreement(1e-2, RsCode(86, 72), FrameConfig(), 40_000, seed=2)
    assert res.passed, res.as_dict()
    lo, hi = res.frame_bracket
    assert lo < res.model_p_frame <= hi


def test_stability_gate_small_grid():
    res = stability_gate((1e-3,), [RsCode(86, 72), RsCode(86, 44)])
    assert res.passed and res.n_checked >= 3
    assert all(r["reference"] >= 1e-27 for r in res.rows)


def test_solver_equivalence_small():
    res = solver_equivalence(20, seed=100)
    assert res.passed and res.feasible > 0
    assert res.as_dict()["passed"] is True
