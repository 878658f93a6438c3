"""Link-technology records, ECC correction of transceiver metrics, and FoM."""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from typing import Optional, Sequence, Union

from .ecc_cost import DEFAULT_RTT_NS, DEFAULT_SYNDROME_FRACTION, CostTable, NodeScaling, ecc_stack_cost
from .exceptions import DomainError, DoubleCorrectionError, InputFormatError, InvariantError
from .reliability import (
    FrameConfig,
    ReliabilityTargets,
    RsCode,
    analyze,
    rs_family,
    select_code,
)

DEFAULT_REFERENCE_BW_GBPS = 1000.0


class LinkKind(str, Enum):
    ELECTRICAL = "E"
    OPTICAL = "O"

    @classmethod
    def parse(cls, value) -> "LinkKind":
        key = str(value).strip().lower()
        if key in ("e", "electrical", "elec"):
            return cls.ELECTRICAL
        if key in ("o", "optical", "opt"):
            return cls.OPTICAL
        raise ValueError(f"unknown link kind {value!r}")


class MetricsKind(str, Enum):
    RAW = "raw"
    CORRECTED = "corrected"

    @classmethod
    def parse(cls, value) -> "MetricsKind":
        key = str(value).strip().lower()
        if key in ("raw", "raw_transceiver", "rawtransceiver"):
            return cls.RAW
        if key in ("corrected", "corrected_delivered", "correcteddelivered"):
            return cls.CORRECTED
        raise ValueError(f"unknown metrics kind {value!r}")


@dataclass(frozen=True)
class LinkRecord:
    name: str
    reach_mm: float
    process_nm: float
    raw_ber: float
    link_kind: LinkKind
    shoreline_gbps_per_mm: float
    areal_gbps_per_mm2: float
    energy_pj_per_bit: float
    metrics_kind: MetricsKind = MetricsKind.CORRECTED

    def __post_init__(self):
        if not str(self.name).strip():
            raise InvariantError("link name must be non-empty")
        object.__setattr__(self, "link_kind", LinkKind.parse(self.link_kind.value if isinstance(self.link_kind, LinkKind) else self.link_kind))
        object.__setattr__(
            self,
            "metrics_kind",
            MetricsKind.parse(self.metrics_kind.value if isinstance(self.metrics_kind, MetricsKind) else self.metrics_kind),
        )
        checks = (
            ("reach_mm", self.reach_mm > 0),
            ("raw_ber", 0 < self.raw_ber < 1),
            ("shoreline_gbps_per_mm", self.shoreline_gbps_per_mm > 0),
            ("areal_gbps_per_mm2", self.areal_gbps_per_mm2 > 0),
            ("energy_pj_per_bit", self.energy_pj_per_bit > 0),
            ("process_nm", self.process_nm > 0),
        )
        for field, ok in checks:
            if not ok:
                raise InvariantError(f"link {self.name!r}: {field}={getattr(self, field)!r} violates its bounds")

    @property
    def is_electrical(self) -> bool:
        return self.link_kind is LinkKind.ELECTRICAL

    @property
    def fom(self) -> float:
        return fom(self)


@dataclass(frozen=True)
class CorrectedMetrics:
    name: str
    shoreline_gbps_per_mm: float
    areal_gbps_per_mm2: float
    energy_pj_per_payload_bit: float
    selected_code: RsCode
    goodput: float
    ecc_energy_pj_per_payload_bit: float = 0.0
    ecc_area_um2: float = 0.0

    @property
    def fom(self) -> float:
        return fom(self)

    def to_record(self, link: LinkRecord) -> LinkRecord:
        """Delivered metrics packaged as a library record for assignment."""
        return replace(
            link,
            shoreline_gbps_per_mm=self.shoreline_gbps_per_mm,
            areal_gbps_per_mm2=self.areal_gbps_per_mm2,
            energy_pj_per_bit=self.energy_pj_per_payload_bit,
            metrics_kind=MetricsKind.CORRECTED,
        )


_COLUMNS = (
    "name",
    "reach_mm",
    "process_nm",
    "raw_ber",
    "link_kind",
    "shoreline_gbps_per_mm",
    "areal_gbps_per_mm2",
    "energy_pj_per_bit",
    "metrics_kind",
)


def load_link_library(source: Union[str, os.PathLike, io.TextIOBase], *, default_metrics_kind: str = "corrected") -> list:
    """Read a link library CSV.

    Lines starting with ``#`` are comments. ``metrics_kind`` may be omitted
    from the file, in which case ``default_metrics_kind`` applies.
    """
    if hasattr(source, "read"):
        name, text = getattr(source, "name", "<stream>"), source.read()
    else:
        name = os.fspath(source)
        with open(source, newline="") as fh:
            text = fh.read()
    return parse_link_library(text, source=name, default_metrics_kind=default_metrics_kind)


def parse_link_library(text: str, source: str = "<text>", default_metrics_kind: str = "corrected") -> list:
    body = [line for line in io.StringIO(text) if line.strip() and not line.lstrip().startswith("#")]
    if not body:
        return []
    reader = csv.DictReader(body)
    required = [c for c in _COLUMNS if c != "metrics_kind"]
    missing = [c for c in required if c not in reader.fieldnames]
    if missing:
        raise InputFormatError(f"missing columns {missing}", source=source)
    out = []
    seen = set()
    for index, row in enumerate(reader, start=1):
        values = {"name": (row["name"] or "").strip()}
        for col in ("reach_mm", "process_nm", "raw_ber", "shoreline_gbps_per_mm", "areal_gbps_per_mm2", "energy_pj_per_bit"):
            try:
                values[col] = float(row[col] or "")
            except ValueError:
                raise InputFormatError(f"not a number: {row[col]!r}", source=source, row=index, field=col) from None
        for col, parser, fallback in (
            ("link_kind", LinkKind.parse, None),
            ("metrics_kind", MetricsKind.parse, default_metrics_kind),
        ):
            raw = row.get(col) or fallback
            try:
                values[col] = parser(raw)
            except ValueError as exc:
                raise InputFormatError(str(exc), source=source, row=index, field=col) from None
        try:
            record = LinkRecord(**values)
        except InvariantError as exc:
            raise InvariantError(f"{source}, row {index}: {exc}") from None
        if record.name in seen:
            raise InvariantError(f"{source}, row {index}: duplicate link name {record.name!r}")
        seen.add(record.name)
        out.append(record)
    return out


def dump_link_library(links: Sequence[LinkRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_COLUMNS)
    for link in links:
        writer.writerow(
            [
                link.name,
                repr(link.reach_mm),
                repr(link.process_nm),
                repr(link.raw_ber),
                link.link_kind.value,
                repr(link.shoreline_gbps_per_mm),
                repr(link.areal_gbps_per_mm2),
                repr(link.energy_pj_per_bit),
                link.metrics_kind.value,
            ]
        )
    return buf.getvalue()


def bundled_library(name: str = "links_table2_7nm_feccrc") -> list:
    """Load one of the link libraries shipped in ``chiplink/data``."""
    ref = resources.files("chiplink").joinpath("data").joinpath(f"{name}.csv")
    if not ref.is_file():
        raise InputFormatError(f"no bundled library named {name!r}", source=name)
    return parse_link_library(ref.read_text(), source=name)


def fom(metrics) -> float:
    """Shoreline bandwidth density divided by energy per delivered bit."""
    energy = getattr(metrics, "energy_pj_per_payload_bit", None)
    if energy is None:
        energy = metrics.energy_pj_per_bit
    if not energy > 0:
        raise DomainError(f"FoM needs positive energy, got {energy!r}")
    return metrics.shoreline_gbps_per_mm / energy


def correct_link(
    link: LinkRecord,
    frame: FrameConfig,
    targets: ReliabilityTargets,
    costs: CostTable,
    scaling: NodeScaling = NodeScaling(),
    *,
    code_family: Optional[Sequence[RsCode]] = None,
    reference_bw_gbps: float = DEFAULT_REFERENCE_BW_GBPS,
    syndrome_fraction: float = DEFAULT_SYNDROME_FRACTION,
    rtt_ns: float = DEFAULT_RTT_NS,
) -> CorrectedMetrics:
    """ECC-corrected delivered metrics of a raw transceiver.

    Wire bits per delivered payload bit are ``1 / goodput``, so the transceiver
    energy is divided by goodput and the ECC energy added on top. For the
    areal density the transceiver area is inferred as ``reference_bw / areal``
    and the ECC area as delivered bandwidth over the stack's areal density.
    Transceiver metrics are never node-scaled. A link whose raw BER already
    meets the target needs no protection and is passed through unchanged.
    """
    if link.metrics_kind is not MetricsKind.RAW:
        raise DoubleCorrectionError(f"link {link.name!r} already carries corrected metrics")
    family = list(code_family) if code_family is not None else rs_family()
    uncoded = max(family, key=lambda c: c.k_symbols)
    if link.raw_ber <= targets.ber_target:
        return CorrectedMetrics(
            name=link.name,
            shoreline_gbps_per_mm=link.shoreline_gbps_per_mm,
            areal_gbps_per_mm2=link.areal_gbps_per_mm2,
            energy_pj_per_payload_bit=link.energy_pj_per_bit,
            selected_code=RsCode(uncoded.n_symbols, uncoded.n_symbols, uncoded.symbol_bits),
            goodput=1.0,
        )
    code = select_code(link.raw_ber, frame, targets, family)
    report = analyze(link.raw_ber, code, frame, targets)
    stack = ecc_stack_cost(code, frame, link.raw_ber, costs, scaling, syndrome_fraction=syndrome_fraction, rtt_ns=rtt_ns)
    goodput = report.goodput
    payload_bw = reference_bw_gbps * goodput
    tx_area = reference_bw_gbps / link.areal_gbps_per_mm2
    ecc_area = 0.0 if stack.area_um2 == 0.0 else payload_bw / stack.areal_gbps_per_mm2
    return CorrectedMetrics(
        name=link.name,
        shoreline_gbps_per_mm=link.shoreline_gbps_per_mm * goodput,
        areal_gbps_per_mm2=payload_bw / (tx_area + ecc_area),
        energy_pj_per_payload_bit=link.energy_pj_per_bit / goodput + stack.energy_pj_per_payload_bit,
        selected_code=code,
        goodput=goodput,
        ecc_energy_pj_per_payload_bit=stack.energy_pj_per_payload_bit,
        ecc_area_um2=stack.area_um2,
    )


def filter_links(links: Sequence[LinkRecord], link_filter) -> list:
    from .assignment import LinkFilter

    link_filter = LinkFilter.parse(link_filter)
    if link_filter is LinkFilter.ALL:
        return list(links)
    want = LinkKind.ELECTRICAL if link_filter is LinkFilter.ELECTRICAL_ONLY else LinkKind.OPTICAL
    return [link for link in links if link.link_kind is want]

