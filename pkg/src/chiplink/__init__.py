"""Chiplet die-to-die link reliability, cost and assignment toolkit."""
from .assignment import (
    AssignmentProblem,
    AssignmentSolution,
    Chiplet,
    LinkFilter,
    Net,
    Status,
    build_problem,
    case_study_transform,
    load_floorplan,
    load_netlist,
    report_totals,
    solve_exact,
    solve_greedy_simple,
)
from .config import ScenarioConfig, deck_path, load_config
from .ecc_cost import (
    CostTable,
    EccCostSummary,
    NodeScaling,
    SynthRecord,
    ecc_stack_cost,
    energy_per_payload_bit,
    gbn_window,
    load_cost_table,
)
from .exceptions import (
    ChiplinkError,
    DanglingEndpointError,
    DegenerateOperatingPointError,
    DomainError,
    DoubleCorrectionError,
    InfeasibleCodeError,
    InputFormatError,
    InvariantError,
    MissingRecordError,
)
from .links import (
    CorrectedMetrics,
    LinkKind,
    LinkRecord,
    MetricsKind,
    bundled_library,
    correct_link,
    filter_links,
    fom,
    load_link_library,
)
from .reliability import (
    FrameConfig,
    ProtectionMode,
    ReliabilityReport,
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

__version__ = "0.1.0"
