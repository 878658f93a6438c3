"""Scenario configuration: flat YAML documents with ``include`` chains."""
from __future__ import annotations

import io
import os
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import List, Optional, Tuple, Union

import yaml

from .assignment import LinkFilter
from .ecc_cost import (
    DEFAULT_GBN_SLACK,
    DEFAULT_RTT_NS,
    DEFAULT_SYNDROME_FRACTION,
    CostTable,
    NodeScaling,
    load_cost_table,
)
from .exceptions import InputFormatError
from .links import bundled_library, load_link_library
from .reliability import FrameConfig, ProtectionMode, ReliabilityTargets

DEFAULT_COST_TABLE = "synth_costs_asap7_sample"
DEFAULT_LIBRARY = "links_table2_7nm_feccrc"
DEFAULT_P_GRID = (1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 1e-6, 1e-7, 1e-8)


@dataclass
class ScenarioConfig:
    # frame and targets
    payload_bytes: int = 256
    header_bytes: int = 8
    mode: str = "hybrid"
    ber_target: float = 1e-27
    p_undet: float = 2.0**-64
    f_wrong: float = 0.5
    max_retries: Optional[int] = 1
    # ECC cost model
    energy_factor: float = 1.0
    area_factor: float = 1.0
    node_label: str = "7nm"
    syndrome_fraction: float = DEFAULT_SYNDROME_FRACTION
    rtt_ns: float = DEFAULT_RTT_NS
    gbn_slack: int = DEFAULT_GBN_SLACK
    reference_bw_gbps: float = 1000.0
    cost_table: str = DEFAULT_COST_TABLE
    # links and assignment
    library: str = DEFAULT_LIBRARY
    library_metrics: str = "corrected"
    netlist: Optional[str] = None
    floorplan: Optional[str] = None
    lambda_p: float = 1.0
    lambda_a: float = 1.0
    filter: str = "all"
    bw_scale: float = 1.0
    dist_scale: float = 1.0
    case_studies: List[Tuple[float, float]] = field(default_factory=list)
    time_budget: Optional[float] = None
    # sweeps and verification
    p_grid: List[float] = field(default_factory=lambda: list(DEFAULT_P_GRID))
    mc_p_pre: float = 1e-2
    mc_code_k: int = 72
    mc_trials: int = 1_000_000
    random_instances: int = 200
    seed: int = 0
    out: Optional[str] = None
    # directory that relative paths resolve against
    base_dir: str = "."

    def __post_init__(self):
        self.filter = LinkFilter.parse(self.filter).value
        self.mode = ProtectionMode.parse(self.mode).value

    def frame(self) -> FrameConfig:
        return FrameConfig(self.payload_bytes, self.header_bytes, ProtectionMode.parse(self.mode))

    def targets(self) -> ReliabilityTargets:
        return ReliabilityTargets(self.ber_target, self.p_undet, self.f_wrong, self.max_retries)

    def scaling(self) -> NodeScaling:
        return NodeScaling(self.energy_factor, self.area_factor, self.node_label)

    def resolve(self, path: str) -> Path:
        p = Path(os.path.expanduser(path))
        return p if p.is_absolute() else Path(self.base_dir) / p

    def load_costs(self) -> CostTable:
        return load_cost_table(_data_or_path(self, self.cost_table))

    def load_library(self) -> list:
        if _is_bundled_name(self.library):
            return bundled_library(self.library)
        return load_link_library(self.resolve(self.library), default_metrics_kind=self.library_metrics)


def _is_bundled_name(value: str) -> bool:
    return os.sep not in value and "/" not in value and not value.endswith(".csv")


def _data_or_path(cfg: ScenarioConfig, value: str):
    if _is_bundled_name(value):
        ref = resources.files("chiplink").joinpath("data").joinpath(f"{value}.csv")
        if not ref.is_file():
            raise InputFormatError(f"no bundled table named {value!r}", source=value)
        buf = io.StringIO(ref.read_text())
        buf.name = value
        return buf
    return cfg.resolve(value)


_FLOATS = {f.name for f in fields(ScenarioConfig) if f.type in ("float", "Optional[float]")}
_INTS = {f.name for f in fields(ScenarioConfig) if f.type in ("int", "Optional[int]")}
_KNOWN = {f.name for f in fields(ScenarioConfig)}


def _coerce(key, value, source):
    # YAML reads "1e-27" (no dot) as a string, so numbers are coerced by field
    try:
        if value is None:
            return None
        if key == "max_retries" and str(value).strip().lower() in ("none", "unbounded", "inf", "infinite"):
            return None
        if key in _FLOATS:
            return float(value)
        if key in _INTS:
            f = float(value)
            if f != int(f):
                raise ValueError(f"{value!r} is not an integer")
            return int(f)
        if key == "p_grid":
            return [float(v) for v in (value or [])]
        if key == "case_studies":
            pairs = []
            for item in value or []:
                if isinstance(item, dict):
                    pairs.append((float(item.get("bw_scale", 1.0)), float(item.get("dist_scale", 1.0))))
                else:
                    bw, dist = item
                    pairs.append((float(bw), float(dist)))
            return pairs
        return str(value)
    except (TypeError, ValueError) as exc:
        raise InputFormatError(f"bad value for {key}: {exc}", source=source, field=key) from None


def read_document(path: Union[str, os.PathLike], _seen: Tuple[str, ...] = ()) -> dict:
    """Merged key/value mapping of ``path`` and everything it includes.

    Included files are applied first, in order, and the including file's own
    keys win. Relative include paths resolve against the including file.
    """
    path = Path(path).resolve()
    if str(path) in _seen:
        raise InputFormatError("include cycle", source=str(path))
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputFormatError(f"cannot read config: {exc.strerror}", source=str(path)) from None
    try:
        doc = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise InputFormatError(f"not valid YAML: {exc}", source=str(path)) from None
    if not isinstance(doc, dict):
        raise InputFormatError("config must be a mapping of keys to values", source=str(path))
    merged: dict = {}
    includes = doc.pop("include", []) or []
    if isinstance(includes, str):
        includes = [includes]
    for inc in includes:
        child = read_document(path.parent / inc, _seen + (str(path),))
        merged.update(child)
    for key, value in doc.items():
        if key in ("netlist", "floorplan", "cost_table", "library") and isinstance(value, str) and not _is_bundled_name(value):
            value = str((path.parent / value).resolve()) if not Path(value).is_absolute() else value
        merged[key] = value
    merged["base_dir"] = str(path.parent)
    merged["_source"] = str(path)
    return merged


def config_from_mapping(mapping: dict, source: str = "<mapping>") -> ScenarioConfig:
    values = {}
    for key, value in mapping.items():
        if key == "_source":
            continue
        if key not in _KNOWN:
            raise InputFormatError(f"unknown key {key!r}", source=source, field=key)
        values[key] = _coerce(key, value, source)
    try:
        return ScenarioConfig(**values)
    except ValueError as exc:
        raise InputFormatError(str(exc), source=source) from None


def load_config(path: Union[str, os.PathLike, None] = None, **overrides) -> ScenarioConfig:
    """Config from a file (or the defaults), with keyword overrides applied last."""
    mapping = read_document(path) if path is not None else {}
    source = mapping.get("_source", "<defaults>")
    cfg = config_from_mapping(mapping, source)
    clean = {k: _coerce(k, v, "<command line>") for k, v in overrides.items() if v is not None}
    if "filter" in clean:
        clean["filter"] = LinkFilter.parse(clean["filter"]).value
    return replace(cfg, **clean)


def deck_path(name: str) -> Path:
    """Scenario file of a bundled example deck (``example1`` .. ``example3``)."""
    ref = resources.files("chiplink").joinpath("data").joinpath("decks").joinpath(name).joinpath("scenario.yaml")
    if not ref.is_file():
        raise InputFormatError(f"no bundled deck named {name!r}", source=name)
    return Path(str(ref))
