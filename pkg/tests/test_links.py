from __future__ import annotations

import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from chiplink import (
    DomainError,
    DoubleCorrectionError,
    FrameConfig,
    InfeasibleCodeError,
    InputFormatError,
    InvariantError,
    LinkKind,
    LinkRecord,
    MetricsKind,
    NodeScaling,
    ReliabilityTargets,
    RsCode,
    bundled_library,
    correct_link,
    filter_links,
    fom,
    load_link_library,
)
from chiplink.links import dump_link_library, parse_link_library


def raw_link(ber=1e-4, **kw):
    values = dict(
        name="L",
        reach_mm=10.0,
        process_nm=5,
        raw_ber=ber,
        link_kind="E",
        shoreline_gbps_per_mm=1000.0,
        areal_gbps_per_mm2=800.0,
        energy_pj_per_bit=0.5,
        metrics_kind="raw",
    )
    values.update(kw)
    return LinkRecord(**values)


def test_bundled_rows(library):
    by_name = {l.name: l for l in library}
    assert len(library) == 25
    sc = by_name["SuperCHIPS"]
    assert (sc.reach_mm, sc.raw_ber, sc.link_kind) == (0.5, 1e-14, LinkKind.ELECTRICAL)
    d = by_name["Daudlin '25"]
    assert (d.reach_mm, d.raw_ber, d.link_kind) == (4000.0, 6e-8, LinkKind.OPTICAL)
    assert all(l.metrics_kind is MetricsKind.CORRECTED for l in library)


@pytest.mark.parametrize("name", ["links_table2_7nm_feconly", "links_table2_3nm_feccrc", "links_table2_3nm_feconly"])
def test_other_bundled_tables(name):
    assert len(bundled_library(name)) == 25


def test_empty_library():
    assert load_link_library(io.StringIO("")) == []
    assert parse_link_library("# only a comment\n") == []


def test_library_round_trip(library):
    again = parse_link_library(dump_link_library(library))
    assert again == library


def test_library_errors():
    header = "name,reach_mm,process_nm,raw_ber,link_kind,shoreline_gbps_per_mm,areal_gbps_per_mm2,energy_pj_per_bit\n"
    with pytest.raises(InputFormatError) as info:
        parse_link_library(header + "A,1,7,x,E,1,1,1\n")
    assert info.value.row == 1 and info.value.field == "raw_ber"
    with pytest.raises(InvariantError, match="row 2"):
        parse_link_library(header + "A,1,7,1e-9,E,1,1,1\nB,1,7,0,E,1,1,1\n")
    with pytest.raises(InvariantError, match="duplicate"):
        parse_link_library(header + "A,1,7,1e-9,E,1,1,1\nA,1,7,1e-9,E,1,1,1\n")
    with pytest.raises(InputFormatError, match="missing"):
        parse_link_library("name,reach_mm\nA,1\n")
    with pytest.raises(InputFormatError):
        parse_link_library(header + "A,1,7,1e-9,Q,1,1,1\n")


def test_unknown_bundled_name():
    with pytest.raises(InputFormatError):
        bundled_library("nope")


def test_fom_anchors():
    class M:
        shoreline_gbps_per_mm = 1144.0
        energy_pj_per_bit = 0.08

    assert fom(M()) == pytest.approx(14300.0, rel=1e-12)
    assert fom(raw_link(shoreline_gbps_per_mm=5270, energy_pj_per_bit=0.29)) == pytest.approx(18172.41379, rel=1e-9)
    x = raw_link(shoreline_gbps_per_mm=3.5, energy_pj_per_bit=3.5)
    assert fom(x) == 1.0
    M.energy_pj_per_bit = 0.0
    with pytest.raises(DomainError):
        fom(M())


def test_superchips_corrected_fom(library):
    sc = next(l for l in library if l.name == "SuperCHIPS")
    assert sc.fom == 1103 / 0.07


def test_passthrough_when_raw_meets_target(costs):
    melek = raw_link(1e-27, shoreline_gbps_per_mm=5270, areal_gbps_per_mm2=4216, energy_pj_per_bit=0.29)
    m = correct_link(melek, FrameConfig(), ReliabilityTargets(), costs)
    assert m.selected_code == RsCode(86, 86)
    assert (m.shoreline_gbps_per_mm, m.areal_gbps_per_mm2, m.energy_pj_per_payload_bit) == (5270, 4216, 0.29)


def test_correction_at_1e4(costs):
    link = raw_link(1e-4)
    m = correct_link(link, FrameConfig(), ReliabilityTargets(), costs)
    assert m.selected_code.k_symbols == 72
    assert m.goodput == pytest.approx(0.788, abs=0.005)
    assert m.shoreline_gbps_per_mm == pytest.approx(1000.0 * m.goodput, rel=1e-15)
    assert m.energy_pj_per_payload_bit == pytest.approx(0.5 / m.goodput + m.ecc_energy_pj_per_payload_bit, rel=1e-15)
    rec = m.to_record(link)
    assert rec.metrics_kind is MetricsKind.CORRECTED and rec.energy_pj_per_bit == m.energy_pj_per_payload_bit


def test_no_double_correction(costs, library):
    with pytest.raises(DoubleCorrectionError):
        correct_link(library[0], FrameConfig(), ReliabilityTargets(), costs)
    m = correct_link(raw_link(), FrameConfig(), ReliabilityTargets(), costs)
    with pytest.raises(DoubleCorrectionError):
        correct_link(m.to_record(raw_link()), FrameConfig(), ReliabilityTargets(), costs)


def test_infeasible_link(costs):
    with pytest.raises(InfeasibleCodeError):
        correct_link(raw_link(5e-2), FrameConfig(), ReliabilityTargets(), costs)


def test_transceiver_metrics_are_not_node_scaled(costs):
    link = raw_link(1e-6)
    a = correct_link(link, FrameConfig(), ReliabilityTargets(), costs)
    b = correct_link(link, FrameConfig(), ReliabilityTargets(), costs, NodeScaling(0.5, 0.33))
    assert a.shoreline_gbps_per_mm == b.shoreline_gbps_per_mm
    assert b.energy_pj_per_payload_bit - b.ecc_energy_pj_per_payload_bit == pytest.approx(
        a.energy_pj_per_payload_bit - a.ecc_energy_pj_per_payload_bit, rel=1e-14
    )


def test_filter_links(library):
    assert len(filter_links(library, "all")) == 25
    elec = filter_links(library, "electrical")
    opt = filter_links(library, "optical")
    assert len(elec) + len(opt) == 25
    assert all(l.is_electrical for l in elec) and not any(l.is_electrical for l in opt)


# --- properties ---------------------------------------------------------------

raw_bers = st.floats(min_value=1e-30, max_value=1e-3)
densities = st.floats(min_value=10.0, max_value=20000.0)
energies = st.floats(min_value=0.01, max_value=10.0)


@given(raw_bers, densities, densities, energies, st.sampled_from(["fec_only", "hybrid"]))
def test_correction_never_improves_link(ber, shore, areal, energy, mode):
    link = raw_link(ber, shoreline_gbps_per_mm=shore, areal_gbps_per_mm2=areal, energy_pj_per_bit=energy)
    m = correct_link(link, FrameConfig(mode=mode), ReliabilityTargets(), _COSTS)
    assert m.shoreline_gbps_per_mm <= shore
    assert m.energy_pj_per_payload_bit >= energy
    assert m.goodput <= 1.0
    assert m.fom == m.shoreline_gbps_per_mm / m.energy_pj_per_payload_bit


@given(st.floats(min_value=1e-6, max_value=1e-3))
def test_hybrid_goodput_at_least_fec_only(ber):
    link = raw_link(ber)
    hyb = correct_link(link, FrameConfig(mode="hybrid"), ReliabilityTargets(), _COSTS)
    fec = correct_link(link, FrameConfig(mode="fec_only"), ReliabilityTargets(), _COSTS)
    assert hyb.selected_code.k_symbols >= fec.selected_code.k_symbols
    assert hyb.goodput >= fec.goodput


@given(densities, energies, densities, energies, st.floats(min_value=1e-3, max_value=1e3))
def test_fom_ranking_invariant_under_common_energy_scale(s1, e1, s2, e2, scale):
    a = raw_link(shoreline_gbps_per_mm=s1, energy_pj_per_bit=e1)
    b = raw_link(shoreline_gbps_per_mm=s2, energy_pj_per_bit=e2)
    a2 = raw_link(shoreline_gbps_per_mm=s1, energy_pj_per_bit=e1 * scale)
    b2 = raw_link(shoreline_gbps_per_mm=s2, energy_pj_per_bit=e2 * scale)
    # compare as cross products so the ordering test itself is exact up to one rounding
    if abs(s1 * e2 - s2 * e1) > 1e-9 * (s1 * e2 + s2 * e1):
        assert (fom(a) > fom(b)) == (fom(a2) > fom(b2))


def _costs():
    from chiplink.config import DEFAULT_COST_TABLE, ScenarioConfig, _data_or_path
    from chiplink.ecc_cost import load_cost_table

    return load_cost_table(_data_or_path(ScenarioConfig(), DEFAULT_COST_TABLE))


_COSTS = _costs()
