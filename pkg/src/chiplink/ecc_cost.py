"""Per-bit energy, area and throughput density of the ECC blocks.

Synthesis results (area, dynamic power, clock) arrive as records. RS codecs are
decoder-limited at their own clock and move ``8K`` information bits per
cycle. CRC and retry blocks move one frame, ``8P`` payload bits, per cycle.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional, Union

from ._validation import check_count, check_positive, check_probability
from .exceptions import DomainError, InputFormatError, InvariantError, MissingRecordError
from .reliability import (
    FrameConfig,
    ProtectionMode,
    RsCode,
    correctable_activity_prob,
    symbol_error_prob,
)

DEFAULT_SYNDROME_FRACTION = 0.4
DEFAULT_CRC_CLOCK_HZ = 500e6
DEFAULT_RTT_NS = 10.0
DEFAULT_GBN_SLACK = 2


class BlockKind(str, Enum):
    RS_ENCODER = "rs_encoder"
    RS_DECODER = "rs_decoder"
    CRC_APPEND = "crc_append"
    CRC_CHECK = "crc_check"
    GBN_RETRY = "gbn_retry"

    @property
    def is_rs(self) -> bool:
        return self in (BlockKind.RS_ENCODER, BlockKind.RS_DECODER)


@dataclass(frozen=True)
class SynthRecord:
    block_kind: BlockKind
    area_um2: float
    dyn_power_mw: float
    clock_period_ns: float
    code_k: Optional[int] = None
    payload_bytes: Optional[int] = None
    rtt_ns: Optional[float] = None

    def __post_init__(self):
        try:
            kind = BlockKind(self.block_kind)
        except ValueError:
            raise InvariantError(f"unknown block kind {self.block_kind!r}") from None
        object.__setattr__(self, "block_kind", kind)
        if not self.area_um2 > 0:
            raise InvariantError(f"{kind.value}: area_um2 must be > 0")
        if not self.dyn_power_mw >= 0:
            raise InvariantError(f"{kind.value}: dyn_power_mw must be >= 0")
        if not self.clock_period_ns > 0:
            raise InvariantError(f"{kind.value}: clock_period_ns must be > 0")
        if kind.is_rs and self.code_k is None:
            raise InvariantError(f"{kind.value}: RS records need code_k")
        if not kind.is_rs and self.payload_bytes is None:
            raise InvariantError(f"{kind.value}: CRC/GBN records need payload_bytes")
        if kind is BlockKind.GBN_RETRY and self.rtt_ns is None:
            raise InvariantError("gbn_retry records need rtt_ns")

    @property
    def clock_hz(self) -> float:
        return 1e9 / self.clock_period_ns


@dataclass(frozen=True)
class NodeScaling:
    """Multiplicative energy/area factors applied to ECC logic only."""

    energy_factor: float = 1.0
    area_factor: float = 1.0
    label: str = "7nm"

    def __post_init__(self):
        check_positive(self.energy_factor, "energy_factor")
        check_positive(self.area_factor, "area_factor")

    @classmethod
    def identity(cls) -> "NodeScaling":
        return cls()


@dataclass(frozen=True)
class EccCostSummary:
    energy_pj_per_payload_bit: float
    area_um2: float
    throughput_gbps: float
    shoreline_gbps_per_mm: float
    areal_gbps_per_mm2: float
    components: dict = field(default_factory=dict, compare=False)

    @property
    def area_mm2(self) -> float:
        return self.area_um2 * 1e-6


_COLUMNS = ("block_kind", "code_k", "payload_bytes", "rtt_ns", "area_um2", "dyn_power_mw", "clock_period_ns")


class CostTable:
    """Immutable lookup over synthesis records."""

    def __init__(self, records: Iterable[SynthRecord] = ()):
        self._records = tuple(records)
        self._rs = {}
        self._crc = {}
        self._gbn = {}
        for rec in self._records:
            if rec.block_kind.is_rs:
                key = (rec.block_kind, rec.code_k)
                table = self._rs
            elif rec.block_kind is BlockKind.GBN_RETRY:
                key = (rec.payload_bytes, float(rec.rtt_ns))
                table = self._gbn
            else:
                key = (rec.block_kind, rec.payload_bytes)
                table = self._crc
            if key in table:
                raise InvariantError(f"duplicate synthesis record for {rec.block_kind.value} {key}")
            table[key] = rec

    def __len__(self):
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    @property
    def records(self) -> tuple:
        return self._records

    def rs(self, kind: BlockKind, code_k: int) -> SynthRecord:
        try:
            return self._rs[(BlockKind(kind), code_k)]
        except KeyError:
            raise MissingRecordError(f"no {BlockKind(kind).value} record for K={code_k}") from None

    def crc(self, kind: BlockKind, payload_bytes: int) -> SynthRecord:
        try:
            return self._crc[(BlockKind(kind), payload_bytes)]
        except KeyError:
            raise MissingRecordError(f"no {BlockKind(kind).value} record for P={payload_bytes}") from None

    def gbn(self, payload_bytes: int, rtt_ns: float) -> SynthRecord:
        try:
            return self._gbn[(payload_bytes, float(rtt_ns))]
        except KeyError:
            raise MissingRecordError(f"no gbn_retry record for P={payload_bytes}, RTT={rtt_ns:g} ns") from None

    def rs_codes(self) -> list:
        return sorted({k for (_, k) in self._rs}, reverse=True)


def _opt(value, conv):
    value = (value or "").strip()
    return conv(value) if value else None


def _as_int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"not an integer: {text}")
    return int(value)


def load_cost_table(source: Union[str, os.PathLike, io.TextIOBase]) -> CostTable:
    """Parse a synthesis cost file (CSV, ``#`` comment lines allowed)."""
    name, text = _read_source(source)
    rows = csv.DictReader(line for line in io.StringIO(text) if line.strip() and not line.lstrip().startswith("#"))
    missing = [c for c in ("block_kind", "area_um2", "dyn_power_mw", "clock_period_ns") if c not in (rows.fieldnames or [])]
    if rows.fieldnames is not None and missing:
        raise InputFormatError(f"missing columns {missing}", source=name)
    records = []
    for index, row in enumerate(rows, start=1):
        values = {}
        for col, conv in (
            ("code_k", _as_int),
            ("payload_bytes", _as_int),
            ("rtt_ns", float),
            ("area_um2", float),
            ("dyn_power_mw", float),
            ("clock_period_ns", float),
        ):
            try:
                values[col] = _opt(row.get(col), conv)
            except ValueError as exc:
                raise InputFormatError(str(exc), source=name, row=index, field=col) from None
        for col in ("area_um2", "dyn_power_mw", "clock_period_ns"):
            if values[col] is None:
                raise InputFormatError("value required", source=name, row=index, field=col)
        try:
            records.append(SynthRecord(block_kind=(row.get("block_kind") or "").strip(), **values))
        except InvariantError as exc:
            raise InputFormatError(str(exc), source=name, row=index, field="block_kind") from None
    return CostTable(records)


def _read_source(source):
    if hasattr(source, "read"):
        return getattr(source, "name", "<stream>"), source.read()
    with open(source, newline="") as fh:
        return os.fspath(source), fh.read()


def dump_cost_table(table: CostTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_COLUMNS)
    for rec in table:
        writer.writerow(
            [
                rec.block_kind.value,
                "" if rec.code_k is None else rec.code_k,
                "" if rec.payload_bytes is None else rec.payload_bytes,
                "" if rec.rtt_ns is None else repr(rec.rtt_ns),
                repr(rec.area_um2),
                repr(rec.dyn_power_mw),
                repr(rec.clock_period_ns),
            ]
        )
    return buf.getvalue()


def energy_per_payload_bit(dyn_power_mw: float, clock_hz: float, payload_bytes: int) -> float:
    """``(P_dyn / f_clk) / (8P)`` in pJ per payload bit (dynamic power only)."""
    check_positive(dyn_power_mw, "dyn_power_mw", allow_zero=True)
    check_positive(clock_hz, "clock_hz")
    check_count(payload_bytes, "payload_bytes", minimum=1)
    joules_per_cycle = dyn_power_mw * 1e-3 / clock_hz
    return joules_per_cycle * 1e12 / (8 * payload_bytes)


def rs_encoder_energy(record: SynthRecord, code: RsCode, info_bits_per_cycle: Optional[float] = None) -> float:
    """Encoder energy per information bit (pJ)."""
    if record.block_kind is not BlockKind.RS_ENCODER or record.code_k != code.k_symbols:
        raise DomainError(f"record {record.block_kind.value} K={record.code_k} does not match encoder of {code}")
    bits = 8 * code.k_symbols if info_bits_per_cycle is None else info_bits_per_cycle
    return record.dyn_power_mw * 1e-3 / record.clock_hz * 1e12 / bits


def rs_decoder_energy(
    record: SynthRecord,
    p_pre: float,
    code: RsCode,
    k_info_bits_per_cycle: Optional[float] = None,
    syndrome_fraction: float = DEFAULT_SYNDROME_FRACTION,
) -> float:
    """Decoder energy per information bit with correction-activity weighting.

    The syndrome stage runs on every codeword; the remainder of the full-power
    energy is only spent when the codeword actually needs correcting, which
    happens with probability ``Pr[1 <= X <= t]``.
    """
    if record.block_kind is not BlockKind.RS_DECODER or record.code_k != code.k_symbols:
        raise DomainError(f"record {record.block_kind.value} K={record.code_k} does not match decoder of {code}")
    check_probability(syndrome_fraction, "syndrome_fraction")
    bits = 8 * code.k_symbols if k_info_bits_per_cycle is None else k_info_bits_per_cycle
    e_full = record.dyn_power_mw * 1e-3 / record.clock_hz * 1e12 / bits
    e_syn = syndrome_fraction * e_full
    p_corr = correctable_activity_prob(symbol_error_prob(p_pre, code.symbol_bits), code)
    return e_syn + p_corr * (e_full - e_syn)


def gbn_window(
    rtt_ns: float,
    clock_hz: float = DEFAULT_CRC_CLOCK_HZ,
    frames_per_cycle: float = 1.0,
    slack_frames: int = DEFAULT_GBN_SLACK,
    frame_bytes: int = 272,
) -> tuple:
    """Go-Back-N replay window: ``(frames, replay_bytes)``.

    ``frames = ceil(RTT * f_clk * frames_per_cycle) + slack``.
    """
    check_positive(rtt_ns, "rtt_ns", allow_zero=True)
    check_positive(clock_hz, "clock_hz")
    check_positive(frames_per_cycle, "frames_per_cycle")
    slack_frames = check_count(slack_frames, "slack_frames")
    frame_bytes = check_count(frame_bytes, "frame_bytes", minimum=1)
    in_flight = rtt_ns * clock_hz * frames_per_cycle / 1e9
    # 10 ns at 500 MHz is 5 cycles, not 5.000000000000001
    frames = math.ceil(round(in_flight, 9)) + slack_frames
    return frames, frames * frame_bytes


def ecc_stack_cost(
    code: RsCode,
    frame: FrameConfig,
    p_pre: float,
    costs: CostTable,
    scaling: NodeScaling = NodeScaling(),
    syndrome_fraction: float = DEFAULT_SYNDROME_FRACTION,
    rtt_ns: float = DEFAULT_RTT_NS,
) -> EccCostSummary:
    """Sum the protection blocks needed by ``frame.mode`` into one summary.

    RS energies are per information bit and are converted to per payload bit
    by ``D / P``. Node scaling multiplies energy and area; clocks are untouched.
    """
    p_pre = check_probability(p_pre, "p_pre")
    payload = frame.payload_bytes
    energy = {}
    area = {}
    throughput = {}
    if not code.is_uncoded:
        enc = costs.rs(BlockKind.RS_ENCODER, code.k_symbols)
        dec = costs.rs(BlockKind.RS_DECODER, code.k_symbols)
        info_per_payload = frame.data_bytes / payload
        energy["rs_encoder"] = rs_encoder_energy(enc, code) * info_per_payload
        energy["rs_decoder"] = rs_decoder_energy(dec, p_pre, code, syndrome_fraction=syndrome_fraction) * info_per_payload
        area["rs_encoder"] = enc.area_um2
        area["rs_decoder"] = dec.area_um2
        # bits per ns == Gbps
        throughput["rs_decoder"] = 8 * code.k_symbols / dec.clock_period_ns
        throughput["rs_encoder"] = 8 * code.k_symbols / enc.clock_period_ns
    if frame.mode is ProtectionMode.HYBRID:
        for name, rec in (
            ("crc_append", costs.crc(BlockKind.CRC_APPEND, payload)),
            ("crc_check", costs.crc(BlockKind.CRC_CHECK, payload)),
            ("gbn_retry", costs.gbn(payload, rtt_ns)),
        ):
            energy[name] = energy_per_payload_bit(rec.dyn_power_mw, rec.clock_hz, payload)
            area[name] = rec.area_um2
            throughput[name] = 8 * payload / rec.clock_period_ns
    energy = {k: v * scaling.energy_factor for k, v in energy.items()}
    area = {k: v * scaling.area_factor for k, v in area.items()}
    total_area_um2 = math.fsum(area.values())
    if not throughput:
        return EccCostSummary(0.0, 0.0, math.inf, math.inf, math.inf, {})
    stack_tput = min(throughput.values())
    area_mm2 = total_area_um2 * 1e-6
    components = {
        name: {"energy_pj_per_payload_bit": energy[name], "area_um2": area[name], "throughput_gbps": throughput[name]}
        for name in energy
    }
    return EccCostSummary(
        energy_pj_per_payload_bit=math.fsum(energy.values()),
        area_um2=total_area_um2,
        throughput_gbps=stack_tput,
        shoreline_gbps_per_mm=stack_tput / math.sqrt(area_mm2),
        areal_gbps_per_mm2=stack_tput / area_mm2,
        components=components,
    )


def rs_density(code: RsCode, costs: CostTable, scaling: NodeScaling = NodeScaling()) -> tuple:
    """Decoder-limited RS information throughput over codec area: ``(Gbps, Gbps/mm, Gbps/mm^2)``."""
    if code.is_uncoded:
        return math.inf, math.inf, math.inf
    enc = costs.rs(BlockKind.RS_ENCODER, code.k_symbols)
    dec = costs.rs(BlockKind.RS_DECODER, code.k_symbols)
    tput = min(8 * code.k_symbols / dec.clock_period_ns, 8 * code.k_symbols / enc.clock_period_ns)
    area_mm2 = (enc.area_um2 + dec.area_um2) * scaling.area_factor * 1e-6
    return tput, tput / math.sqrt(area_mm2), tput / area_mm2


def with_scaling(summary: EccCostSummary, scaling: NodeScaling) -> EccCostSummary:
    """Apply node scaling to an already-computed identity-scaled summary."""
    area_um2 = summary.area_um2 * scaling.area_factor
    if area_um2 == 0.0:
        return summary
    area_mm2 = area_um2 * 1e-6
    return replace(
        summary,
        energy_pj_per_payload_bit=summary.energy_pj_per_payload_bit * scaling.energy_factor,
        area_um2=area_um2,
        shoreline_gbps_per_mm=summary.throughput_gbps / math.sqrt(area_mm2),
        areal_gbps_per_mm2=summary.throughput_gbps / area_mm2,
        components={},
    )
