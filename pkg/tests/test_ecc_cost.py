from __future__ import annotations

import io
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from chiplink import (
    FrameConfig,
    InputFormatError,
    InvariantError,
    MissingRecordError,
    NodeScaling,
    RsCode,
    SynthRecord,
    ecc_stack_cost,
    energy_per_payload_bit,
    gbn_window,
    load_cost_table,
    rs_family,
    symbol_error_prob,
)
from chiplink.ecc_cost import BlockKind, CostTable, dump_cost_table, rs_decoder_energy, rs_density, rs_encoder_energy, with_scaling
from chiplink.oracle import hp_binom_tail, hp_symbol_error_prob

CODED = [c for c in rs_family() if not c.is_uncoded]


def test_energy_anchors():
    assert energy_per_payload_bit(6.28, 500e6, 256) == pytest.approx(0.0061328125, rel=1e-15)
    assert round(energy_per_payload_bit(2.05, 500e6, 256), 5) == 0.00200
    assert energy_per_payload_bit(0.0, 1e9, 64) == 0.0


@given(
    st.floats(0.01, 100),
    st.floats(1e8, 5e9),
    st.integers(1, 4096),
    st.floats(0.1, 10),
    st.integers(1, 8),
)
def test_energy_linear_in_power_inverse_in_payload(power, clock, payload, a, m):
    base = energy_per_payload_bit(power, clock, payload)
    assert energy_per_payload_bit(power * a, clock, payload) == pytest.approx(a * base, rel=1e-12)
    assert energy_per_payload_bit(power, clock, payload * m) == pytest.approx(base / m, rel=1e-12)


def test_decoder_energy_bounds(costs):
    code = RsCode(86, 72)
    rec = costs.rs(BlockKind.RS_DECODER, 72)
    e_full = rec.dyn_power_mw * 1e-3 / rec.clock_hz * 1e12 / (8 * 72)
    assert rs_decoder_energy(rec, 0.0, code) == pytest.approx(0.4 * e_full, rel=1e-15)
    at_one = rs_decoder_energy(rec, 1.0, code)
    assert 0.4 * e_full <= at_one <= e_full


def test_decoder_energy_hand_evaluation(costs):
    code = RsCode(86, 72)
    rec = costs.rs(BlockKind.RS_DECODER, 72)
    q = hp_symbol_error_prob(1e-4)
    p_corr = hp_binom_tail(86, q, 0) - hp_binom_tail(86, q, 7)
    e_full = Fraction(rec.dyn_power_mw) * Fraction(rec.clock_period_ns) / (8 * 72)
    ref = Fraction(2, 5) * e_full + p_corr * Fraction(3, 5) * e_full
    assert rs_decoder_energy(rec, 1e-4, code) == pytest.approx(float(ref), rel=1e-12)


@given(st.floats(0, 1e-4), st.floats(0, 1e-4), st.sampled_from(CODED))
def test_decoder_energy_monotone_in_p(p1, p2, code):
    # below the turnover of Pr[1 <= X <= t] for every code of the family
    rec = _COSTS.rs(BlockKind.RS_DECODER, code.k_symbols)
    lo, hi = sorted((p1, p2))
    assert rs_decoder_energy(rec, lo, code) <= rs_decoder_energy(rec, hi, code) * (1 + 1e-12)


def test_decoder_energy_turns_over_on_very_noisy_channels(costs):
    # with t = 1, Pr[X = 1] peaks at p_sym = 1/N; beyond it most codewords are
    # uncorrectable and the correction stage idles again
    code = RsCode(86, 84)
    rec = costs.rs(BlockKind.RS_DECODER, 84)
    peak = -math.expm1(math.log1p(-1 / 86) / 8)
    assert rs_decoder_energy(rec, peak, code) > rs_decoder_energy(rec, 3e-2, code)


def test_record_mismatch_rejected(costs):
    from chiplink import DomainError

    with pytest.raises(DomainError):
        rs_encoder_energy(costs.rs(BlockKind.RS_ENCODER, 72), RsCode(86, 70))
    with pytest.raises(DomainError):
        rs_decoder_energy(costs.rs(BlockKind.RS_ENCODER, 72), 1e-4, RsCode(86, 72))


@pytest.mark.parametrize("rtt,expect", [(10.0, (7, 1904)), (0.0, (2, 544)), (20.0, (12, 3264))])
def test_gbn_window(rtt, expect):
    assert gbn_window(rtt, 500e6, 1.0, 2, 272) == expect


@given(st.floats(0, 500), st.floats(0, 500), st.integers(1, 9000))
def test_gbn_window_monotone(r1, r2, d):
    lo, hi = sorted((r1, r2))
    f_lo, _ = gbn_window(lo, frame_bytes=d)
    f_hi, bytes_hi = gbn_window(hi, frame_bytes=d)
    assert f_lo <= f_hi
    assert bytes_hi == f_hi * d


def test_uncoded_fec_only_stack_is_empty(costs):
    s = ecc_stack_cost(RsCode(86, 86), FrameConfig(mode="fec_only"), 1e-12, costs)
    assert s.energy_pj_per_payload_bit == 0.0 and s.area_um2 == 0.0
    assert s.components == {}


def test_hybrid_stack_adds_crc_and_retry(costs):
    code = RsCode(86, 72)
    hyb = ecc_stack_cost(code, FrameConfig(), 1e-4, costs)
    crc = 2 * energy_per_payload_bit(6.28, 500e6, 256) + energy_per_payload_bit(2.05, 500e6, 256)
    rs_only = hyb.components["rs_encoder"]["energy_pj_per_payload_bit"] + hyb.components["rs_decoder"]["energy_pj_per_payload_bit"]
    assert hyb.energy_pj_per_payload_bit == pytest.approx(rs_only + crc, rel=1e-14)
    # each block within one unit of the last printed digit of its published value
    assert energy_per_payload_bit(6.28, 500e6, 256) == pytest.approx(0.00614, abs=1e-5)
    assert energy_per_payload_bit(2.05, 500e6, 256) == pytest.approx(0.00201, abs=1e-5)


def test_scaling_arithmetic(costs):
    code, frame = RsCode(86, 72), FrameConfig()
    base = ecc_stack_cost(code, frame, 1e-4, costs)
    scaled = ecc_stack_cost(code, frame, 1e-4, costs, NodeScaling(0.5, 0.33))
    assert scaled.energy_pj_per_payload_bit == pytest.approx(0.5 * base.energy_pj_per_payload_bit, rel=1e-14)
    assert scaled.area_um2 == pytest.approx(0.33 * base.area_um2, rel=1e-14)
    assert scaled.areal_gbps_per_mm2 == pytest.approx(base.areal_gbps_per_mm2 / 0.33, rel=1e-14)
    assert scaled.shoreline_gbps_per_mm == pytest.approx(base.shoreline_gbps_per_mm / math.sqrt(0.33), rel=1e-14)
    assert scaled.throughput_gbps == base.throughput_gbps


@given(
    st.sampled_from(rs_family()),
    st.sampled_from(["fec_only", "hybrid"]),
    st.floats(1e-8, 1e-2),
    st.floats(0.05, 4.0),
    st.floats(0.05, 4.0),
)
def test_scaling_commutes(code, mode, p, ef, af):
    frame = FrameConfig(mode=mode)
    scaling = NodeScaling(ef, af)
    direct = ecc_stack_cost(code, frame, p, _COSTS, scaling)
    later = with_scaling(ecc_stack_cost(code, frame, p, _COSTS), scaling)
    assert later.energy_pj_per_payload_bit == pytest.approx(direct.energy_pj_per_payload_bit, rel=1e-12)
    assert later.area_um2 == pytest.approx(direct.area_um2, rel=1e-12)
    if direct.area_um2:
        assert later.areal_gbps_per_mm2 == pytest.approx(direct.areal_gbps_per_mm2, rel=1e-12)
        assert later.shoreline_gbps_per_mm == pytest.approx(direct.shoreline_gbps_per_mm, rel=1e-12)


@given(st.sampled_from(rs_family()), st.sampled_from(["fec_only", "hybrid"]), st.floats(1e-8, 1e-2))
def test_stack_throughput_is_bottleneck(code, mode, p):
    s = ecc_stack_cost(code, FrameConfig(mode=mode), p, _COSTS)
    for comp in s.components.values():
        assert s.throughput_gbps <= comp["throughput_gbps"]


def test_rs_density(costs):
    assert rs_density(RsCode(86, 86), costs) == (math.inf, math.inf, math.inf)
    tput, shore, areal = rs_density(RsCode(86, 72), costs)
    enc, dec = costs.rs(BlockKind.RS_ENCODER, 72), costs.rs(BlockKind.RS_DECODER, 72)
    area_mm2 = (enc.area_um2 + dec.area_um2) * 1e-6
    assert tput == pytest.approx(8 * 72 / max(enc.clock_period_ns, dec.clock_period_ns), rel=1e-15)
    assert areal == pytest.approx(tput / area_mm2, rel=1e-14)
    assert shore**2 / areal == pytest.approx(tput, rel=1e-12)


def test_missing_record():
    table = CostTable([SynthRecord("crc_append", 10.0, 1.0, 2.0, payload_bytes=256)])
    with pytest.raises(MissingRecordError):
        table.rs(BlockKind.RS_DECODER, 72)
    with pytest.raises(MissingRecordError):
        ecc_stack_cost(RsCode(86, 72), FrameConfig(), 1e-4, table)


def test_record_invariants():
    with pytest.raises(InvariantError):
        SynthRecord("rs_decoder", 10.0, 1.0, 2.0)
    with pytest.raises(InvariantError):
        SynthRecord("gbn_retry", 10.0, 1.0, 2.0, payload_bytes=256)
    with pytest.raises(InvariantError):
        SynthRecord("bogus", 10.0, 1.0, 2.0)
    with pytest.raises(InvariantError):
        CostTable([SynthRecord("crc_check", 1, 1, 1, payload_bytes=8)] * 2)


def test_table_round_trip(costs):
    again = load_cost_table(io.StringIO(dump_cost_table(costs)))
    assert again.records == costs.records
    assert costs.rs_codes()[0] == 84 and costs.rs_codes()[-1] == 44


def test_bad_cost_file_names_row_and_field():
    text = "block_kind,code_k,payload_bytes,rtt_ns,area_um2,dyn_power_mw,clock_period_ns\ncrc_append,,256,,10,oops,2\n"
    with pytest.raises(InputFormatError) as info:
        load_cost_table(io.StringIO(text))
    assert info.value.row == 1 and info.value.field == "dyn_power_mw"


def _load():
    from chiplink.config import DEFAULT_COST_TABLE, ScenarioConfig, _data_or_path

    return load_cost_table(_data_or_path(ScenarioConfig(), DEFAULT_COST_TABLE))


_COSTS = _load()
