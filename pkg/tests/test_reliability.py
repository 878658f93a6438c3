from __future__ import annotations

import math
from decimal import Decimal, localcontext
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from chiplink import (
    DegenerateOperatingPointError,
    DomainError,
    FrameConfig,
    InfeasibleCodeError,
    ReliabilityTargets,
    RsCode,
    analyze,
    block_fail_prob,
    fec_only_analysis,
    frame_fail_prob,
    hybrid_failure_analysis,
    post_fec_ber,
    rs_family,
    select_code,
    symbol_error_prob,
)
from chiplink.oracle import hp_binom_tail, hp_block_fail_prob, hp_symbol_error_prob, relative_error
from chiplink.reliability import binomial_range_prob, correctable_activity_prob, frame_fail_budget

FAMILY = rs_family()
p_pre = st.floats(min_value=1e-9, max_value=3e-2)


def test_family_shape():
    ks = [c.k_symbols for c in FAMILY]
    assert ks[0] == 86 and ks[-1] == 44 and len(ks) == 22
    assert all(a - b == 2 for a, b in zip(ks, ks[1:]))
    assert RsCode(86, 72).t_correctable == 7
    assert RsCode(86, 86).is_uncoded


@pytest.mark.parametrize("n,k", [(86, 87), (86, 0), (300, 44)])
def test_rscode_rejects_bad_shapes(n, k):
    with pytest.raises(DomainError):
        RsCode(n, k)


def test_symbol_error_prob_edges():
    assert symbol_error_prob(0.0) == 0.0
    assert symbol_error_prob(1.0) == 1.0
    assert symbol_error_prob(1e-3) == pytest.approx(7.972055930055972e-3, rel=1e-14)
    # tiny p keeps full precision: 8p - 28p^2
    assert symbol_error_prob(1e-20) == pytest.approx(8e-20, rel=1e-15)


@pytest.mark.parametrize("bad", [-1e-3, 1.5, float("nan")])
def test_symbol_error_prob_domain(bad):
    with pytest.raises(DomainError):
        symbol_error_prob(bad)


def test_block_fail_prob_anchors():
    assert block_fail_prob(0.0, RsCode(86, 44)) == 0.0
    assert block_fail_prob(0.01, RsCode(86, 86)) == pytest.approx(1 - 0.99**86, rel=1e-13)


def test_correctable_activity_prob_vs_oracle():
    code = RsCode(86, 72)
    p_sym = symbol_error_prob(1e-4)
    q = hp_symbol_error_prob(1e-4)
    ref = hp_binom_tail(86, q, 0) - hp_binom_tail(86, q, code.t_correctable)
    assert relative_error(correctable_activity_prob(p_sym, code), ref) < 1e-12
    assert correctable_activity_prob(0.3, RsCode(86, 86)) == 0.0


def test_post_fec_ber_worst_case_anchor():
    assert post_fec_ber(1e-3, RsCode(86, 44)) <= 1e-27
    assert post_fec_ber(1e-3, RsCode(86, 46)) > 1e-27
    assert post_fec_ber(0.0, RsCode(86, 44)) == 0.0


def test_frame_fail_prob_matches_extended_precision():
    code, frame = RsCode(86, 72), FrameConfig()
    p_blk = hp_block_fail_prob(1e-4, code)
    with localcontext() as ctx:
        ctx.prec = 60
        b_eff = Decimal(frame.data_bytes) / Decimal(code.k_symbols)
        one_minus = Decimal(1) - Decimal(p_blk.numerator) / Decimal(p_blk.denominator)
        ref = Decimal(1) - (b_eff * one_minus.ln()).exp()
    got = frame_fail_prob(1e-4, code, frame)
    assert abs(Decimal(got) - ref) / ref < Decimal("1e-12")


def test_frame_fail_with_one_codeword_is_block_fail():
    code = RsCode(86, 72)
    # D = 72 bytes: header 8 + CRC 8 + payload 56
    frame = FrameConfig(56, 8, "hybrid")
    p = 1e-3
    assert frame_fail_prob(p, code, frame) == pytest.approx(block_fail_prob(symbol_error_prob(p), code), rel=1e-14)


def test_hybrid_zero_channel(hybrid, targets):
    code = RsCode(86, 72)
    rep = hybrid_failure_analysis(0.0, code, hybrid, targets)
    assert rep.ber_delivered == 0.0 and rep.p_drop == 0.0
    assert rep.goodput == pytest.approx(256 / (272 * 86 / 72), rel=1e-15)


def test_fec_only_anchors(fec):
    rep = fec_only_analysis(1e-4, RsCode(86, 62), fec)
    assert rep.goodput == pytest.approx(256 * 62 / (264 * 86), rel=1e-14)
    assert fec_only_analysis(0.0, RsCode(86, 86), fec).goodput == pytest.approx(256 / 264, rel=1e-15)
    assert fec_only_analysis(1e-3, RsCode(86, 44), fec).ber_delivered <= 1e-27
    # no decoder at K = N: the raw channel is delivered
    assert fec_only_analysis(3e-5, RsCode(86, 86), fec).ber_delivered == 3e-5


def test_mode_guards(hybrid, fec):
    with pytest.raises(DomainError):
        hybrid_failure_analysis(1e-4, RsCode(86, 72), fec)
    with pytest.raises(DomainError):
        fec_only_analysis(1e-4, RsCode(86, 72), hybrid)


def test_degenerate_operating_point(hybrid):
    with pytest.raises(DegenerateOperatingPointError):
        hybrid_failure_analysis(1.0, RsCode(86, 86), hybrid, ReliabilityTargets(p_undet=0.0))


def test_frame_fail_budget_cases(hybrid):
    assert frame_fail_budget(hybrid, ReliabilityTargets(p_undet=0.0, max_retries=None)) == 1.0
    t = ReliabilityTargets()
    sdc = 1e-27 / (0.5 * 2.0**-64 + 1e-27 * (1 - 2.0**-64))
    assert frame_fail_budget(hybrid, t) <= sdc
    assert frame_fail_budget(hybrid, ReliabilityTargets(max_retries=None)) == pytest.approx(sdc, rel=1e-15)
    with pytest.raises(DomainError):
        frame_fail_budget(FrameConfig(mode="fec_only"), t)


def test_select_code_anchors_that_hold(hybrid, fec, targets):
    assert select_code(1e-3, fec, targets).k_symbols == 44
    assert select_code(1e-4, hybrid, targets).k_symbols == 72
    for frame in (hybrid, fec):
        assert select_code(1e-27, frame, targets).k_symbols == 86


def test_select_code_near_boundary(hybrid, fec):
    # the published FEC-only 62 / unbounded 78 pair holds for raw BER just below 1e-4
    assert select_code(8.8e-5, fec).k_symbols == 62
    assert select_code(8.8e-5, hybrid, ReliabilityTargets(max_retries=None)).k_symbols == 78


def test_select_code_infeasible(fec):
    with pytest.raises(InfeasibleCodeError) as info:
        select_code(3e-2, fec)
    assert info.value.strongest == RsCode(86, 44)


def test_select_code_meets_target_and_next_weaker_fails(hybrid, fec, targets):
    for frame in (hybrid, fec):
        for p in (1e-3, 3e-4, 1e-4, 1e-5, 1e-6):
            code = select_code(p, frame, targets)
            assert analyze(p, code, frame, targets).ber_delivered <= targets.ber_target
            if code.k_symbols < 86:
                weaker = RsCode(86, code.k_symbols + 2)
                rep = analyze(p, weaker, frame, targets)
                assert rep.ber_delivered > targets.ber_target or rep.ber_drop_eff > targets.ber_target


# --- properties ---------------------------------------------------------------


@pytest.mark.parametrize("p", [1e-2, 1e-3, 1e-4, 1e-6])
def test_stronger_code_never_raises_ber(p):
    bers = [post_fec_ber(p, c) for c in FAMILY]  # K descending
    assert all(b <= a for a, b in zip(bers, bers[1:]))


@given(p_pre, p_pre, st.sampled_from(FAMILY))
def test_channel_monotonicity(p1, p2, code):
    lo, hi = sorted((p1, p2))
    frame = FrameConfig()
    assert symbol_error_prob(lo) <= symbol_error_prob(hi)
    assert block_fail_prob(symbol_error_prob(lo), code) <= block_fail_prob(symbol_error_prob(hi), code)
    assert frame_fail_prob(lo, code, frame) <= frame_fail_prob(hi, code, frame)
    try:
        b = hybrid_failure_analysis(hi, code, frame)
    except DegenerateOperatingPointError:
        return
    assert hybrid_failure_analysis(lo, code, frame).ber_delivered <= b.ber_delivered


@given(p_pre, p_pre, st.sampled_from(["fec_only", "hybrid"]))
def test_selected_k_non_increasing_in_p(p1, p2, mode):
    lo, hi = sorted((p1, p2))
    frame = FrameConfig(mode=mode)

    def k(p):
        try:
            return select_code(p, frame).k_symbols
        except InfeasibleCodeError:
            return 0

    assert k(lo) >= k(hi)


@given(st.floats(min_value=1e-6, max_value=1e-3), st.sampled_from([0, 1, 2, None]))
def test_hybrid_never_needs_stronger_code(p, retries):
    t = ReliabilityTargets(max_retries=retries)
    k_fec = select_code(p, FrameConfig(mode="fec_only"), t).k_symbols
    k_hyb = select_code(p, FrameConfig(mode="hybrid"), t).k_symbols
    assert k_hyb >= k_fec


@given(p_pre, st.sampled_from(FAMILY), st.integers(16, 4096), st.integers(0, 64))
def test_goodput_identity(p, code, payload, header):
    frame = FrameConfig(payload, header, "hybrid")
    try:
        rep = hybrid_failure_analysis(p, code, frame)
    except DegenerateOperatingPointError:
        return
    expect = (frame.payload_bytes / frame.data_bytes) * (code.k_symbols / code.n_symbols) * (1 - rep.p_det)
    assert rep.goodput == pytest.approx(expect, rel=1e-15, abs=0)


@given(st.integers(1, 120), st.floats(0, 1), st.integers(-1, 121), st.integers(-1, 121))
def test_binomial_range_split(n, p, a, b):
    lo, hi = sorted((a, b))
    whole = binomial_range_prob(n, p, 0, n)
    assert whole == pytest.approx(1.0, rel=1e-12)
    parts = binomial_range_prob(n, p, 0, lo) + binomial_range_prob(n, p, lo + 1, n)
    assert parts == pytest.approx(1.0, rel=1e-12)


def test_report_as_dict_round_trip(hybrid):
    d = analyze(1e-4, RsCode(86, 72), hybrid).as_dict()
    assert d["code"] == "RS(86,72)" and d["k_symbols"] == 72 and d["mode"] == "hybrid"
    assert math.isfinite(d["goodput"])


def test_tail_terms_sum_to_one():
    q = Fraction(3, 1000)
    from chiplink.oracle import hp_binom_head

    for t in (0, 5, 21, 85):
        assert hp_binom_tail(86, q, t) + hp_binom_head(86, q, t) == 1
