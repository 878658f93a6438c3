"""Command-line front end.

    chiplink ecc-sweep     code choice, goodput and ECC cost over a raw-BER grid
    chiplink link-metrics  ECC-corrected link library and figures of merit
    chiplink assign        exact and greedy link assignment, plus case studies
    chiplink oracle-check  numerical, statistical and solver verification

Exit status: 0 on success (an infeasible assignment is a result, not an
error), 1 when a verification check fails, 2 on bad input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

from .assignment import (
    LinkFilter,
    build_problem,
    case_study_transform,
    format_solution,
    load_floorplan,
    load_netlist,
    solution_csv,
    solve_exact,
    solve_greedy_simple,
)
from .config import ScenarioConfig, deck_path, load_config
from .ecc_cost import ecc_stack_cost, gbn_window
from .exceptions import ChiplinkError, DegenerateOperatingPointError, InfeasibleCodeError
from .links import MetricsKind, correct_link, fom
from .oracle import check_constraints
from .reliability import ProtectionMode, RsCode, analyze, rs_family, select_code
from .verify import GATE_GRID, monte_carlo_agreement, solver_equivalence, stability_gate

log = logging.getLogger("chiplink")

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_INPUT = 2


class VerificationFailed(Exception):
    pass


# --------------------------------------------------------------------------
# output helpers


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: Sequence[dict], columns: Optional[Sequence[str]] = None) -> str:
    columns = list(columns or (rows[0].keys() if rows else []))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


class Report:
    """Collects output files; writes nothing when no output directory is set."""

    def __init__(self, out: Optional[str]):
        self.root = Path(out) if out else None
        self.written: List[Path] = []

    def write(self, name: str, text: str) -> None:
        if self.root is None:
            return
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.written.append(path)

    def csv(self, name: str, rows: Sequence[dict], columns: Optional[Sequence[str]] = None) -> None:
        self.write(name, rows_to_csv(rows, columns))

    def json(self, name: str, payload) -> None:
        self.write(name, json.dumps(_jsonable(payload), indent=2) + "\n")


def _table(rows: Sequence[dict], columns: Sequence[str], formats: Optional[dict] = None) -> str:
    formats = formats or {}

    def fmt(col, value):
        if value is None or value == "":
            return "-"
        if col in formats and isinstance(value, (int, float)):
            return format(value, formats[col])
        return str(value)

    cells = [[fmt(c, r.get(c)) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


# --------------------------------------------------------------------------
# ecc-sweep

SWEEP_COLUMNS = (
    "p_pre",
    "mode",
    "status",
    "code",
    "k",
    "goodput",
    "ber_delivered",
    "p_frame_fail",
    "ecc_energy_pj_per_payload_bit",
    "ecc_area_um2",
    "stack_throughput_gbps",
    "shoreline_gbps_per_mm",
    "areal_gbps_per_mm2",
)


def _sweep_modes(cfg: ScenarioConfig):
    frame = cfg.frame()
    targets = cfg.targets()
    fec = frame.with_mode(ProtectionMode.FEC_ONLY)
    hyb = frame.with_mode(ProtectionMode.HYBRID)
    modes = [("fec_only", fec, targets)]
    if targets.max_retries is not None:
        modes.append((f"hybrid_r{targets.max_retries}", hyb, targets))
    modes.append(("hybrid_unbounded", hyb, replace(targets, max_retries=None)))
    return modes


def sweep_rows(cfg: ScenarioConfig) -> List[dict]:
    costs = cfg.load_costs()
    scaling = cfg.scaling()
    family = rs_family()
    rows = []
    for p in cfg.p_grid:
        for label, frame, targets in _sweep_modes(cfg):
            row = {"p_pre": p, "mode": label}
            try:
                code = select_code(p, frame, targets, family)
                rep = analyze(p, code, frame, targets)
            except (InfeasibleCodeError, DegenerateOperatingPointError) as exc:
                row["status"] = "infeasible"
                log.info("p_pre=%g %s: %s", p, label, exc)
                rows.append(row)
                continue
            stack = ecc_stack_cost(code, frame, p, costs, scaling, cfg.syndrome_fraction, cfg.rtt_ns)
            row.update(
                status="ok",
                code=str(code),
                k=code.k_symbols,
                goodput=rep.goodput,
                ber_delivered=rep.ber_delivered,
                p_frame_fail=rep.p_frame_fail,
                ecc_energy_pj_per_payload_bit=stack.energy_pj_per_payload_bit,
                ecc_area_um2=stack.area_um2,
                stack_throughput_gbps=stack.throughput_gbps,
                shoreline_gbps_per_mm=stack.shoreline_gbps_per_mm,
                areal_gbps_per_mm2=stack.areal_gbps_per_mm2,
            )
            rows.append(row)
    return rows


def cmd_ecc_sweep(cfg: ScenarioConfig, args) -> int:
    rows = sweep_rows(cfg)
    report = Report(cfg.out)
    report.csv("ecc_sweep.csv", rows, SWEEP_COLUMNS)
    for label, _, _ in _sweep_modes(cfg):
        report.csv(f"ecc_sweep_{label}.csv", [r for r in rows if r["mode"] == label], SWEEP_COLUMNS)
    frames, replay = gbn_window(cfg.rtt_ns, slack_frames=cfg.gbn_slack, frame_bytes=cfg.frame().with_mode("hybrid").data_bytes)
    report.json("ecc_sweep.json", {"rows": rows, "gbn_window": {"frames": frames, "replay_bytes": replay}})
    print(f"ECC sweep over {len(cfg.p_grid)} raw-BER points, target {cfg.ber_target:g}")
    if rows:
        print(
            _table(
                rows,
                ("p_pre", "mode", "code", "goodput", "ecc_energy_pj_per_payload_bit", "areal_gbps_per_mm2"),
                {"p_pre": ".0e", "goodput": ".4f", "ecc_energy_pj_per_payload_bit": ".4f", "areal_gbps_per_mm2": ".4g"},
            )
        )
    print(f"GBN replay window: {frames} frames, {replay} bytes")
    _print_written(report)
    return EXIT_OK


# --------------------------------------------------------------------------
# link-metrics

METRIC_COLUMNS = (
    "name",
    "link_kind",
    "reach_mm",
    "raw_ber",
    "input_metrics",
    "status",
    "code",
    "goodput",
    "shoreline_gbps_per_mm",
    "areal_gbps_per_mm2",
    "energy_pj_per_payload_bit",
    "fom_raw",
    "fom_corrected",
)


def link_metric_rows(cfg: ScenarioConfig, links) -> List[dict]:
    frame, targets = cfg.frame(), cfg.targets()
    costs = None
    rows = []
    for link in links:
        row = {
            "name": link.name,
            "link_kind": link.link_kind.value,
            "reach_mm": link.reach_mm,
            "raw_ber": link.raw_ber,
            "input_metrics": link.metrics_kind.value,
        }
        if link.metrics_kind is MetricsKind.CORRECTED:
            # delivered metrics given; the code is reported for reference only
            try:
                code = RsCode(86, 86) if link.raw_ber <= targets.ber_target else select_code(link.raw_ber, frame, targets)
                row["code"] = str(code)
            except InfeasibleCodeError:
                row["code"] = "none"
            row.update(
                status="given",
                shoreline_gbps_per_mm=link.shoreline_gbps_per_mm,
                areal_gbps_per_mm2=link.areal_gbps_per_mm2,
                energy_pj_per_payload_bit=link.energy_pj_per_bit,
                fom_corrected=fom(link),
            )
            rows.append(row)
            continue
        row["fom_raw"] = fom(link)
        if costs is None:
            costs = cfg.load_costs()
        try:
            m = correct_link(
                link,
                frame,
                targets,
                costs,
                cfg.scaling(),
                reference_bw_gbps=cfg.reference_bw_gbps,
                syndrome_fraction=cfg.syndrome_fraction,
                rtt_ns=cfg.rtt_ns,
            )
        except (InfeasibleCodeError, DegenerateOperatingPointError) as exc:
            log.warning("link %s: %s", link.name, exc)
            row["status"] = "infeasible"
            rows.append(row)
            continue
        row.update(
            status="corrected",
            code=str(m.selected_code),
            goodput=m.goodput,
            shoreline_gbps_per_mm=m.shoreline_gbps_per_mm,
            areal_gbps_per_mm2=m.areal_gbps_per_mm2,
            energy_pj_per_payload_bit=m.energy_pj_per_payload_bit,
            fom_corrected=m.fom,
        )
        rows.append(row)
    return rows


def cmd_link_metrics(cfg: ScenarioConfig, args) -> int:
    links = cfg.load_library()
    rows = link_metric_rows(cfg, links)
    report = Report(cfg.out)
    report.csv("link_metrics.csv", rows, METRIC_COLUMNS)
    report.csv("fom_raw.csv", [r for r in rows if r.get("fom_raw") is not None], ("name", "fom_raw"))
    report.csv("fom_corrected.csv", [r for r in rows if r.get("fom_corrected") is not None], ("name", "fom_corrected"))
    report.json("link_metrics.json", rows)
    print(f"Link metrics for {len(rows)} links ({cfg.library})")
    if rows:
        print(
            _table(
                rows,
                ("name", "status", "code", "shoreline_gbps_per_mm", "areal_gbps_per_mm2", "energy_pj_per_payload_bit", "fom_raw", "fom_corrected"),
                {
                    "shoreline_gbps_per_mm": ".1f",
                    "areal_gbps_per_mm2": ".1f",
                    "energy_pj_per_payload_bit": ".4g",
                    "fom_raw": ".1f",
                    "fom_corrected": ".1f",
                },
            )
        )
    bad = [r["name"] for r in rows if r["status"] == "infeasible"]
    if bad:
        print(f"warning: no code meets the target for {', '.join(bad)}")
    _print_written(report)
    return EXIT_OK


# --------------------------------------------------------------------------
# assign


def _case_label(bw: float, dist: float) -> str:
    if bw == 1.0 and dist == 1.0:
        return "baseline"
    return f"bw{bw:g}_dist{dist:g}"


def assignment_library(cfg: ScenarioConfig) -> list:
    """Library ready for assignment: raw records are corrected first."""
    links = cfg.load_library()
    if all(l.metrics_kind is MetricsKind.CORRECTED for l in links):
        return links
    costs = cfg.load_costs()
    out = []
    for link in links:
        if link.metrics_kind is MetricsKind.CORRECTED:
            out.append(link)
            continue
        try:
            m = correct_link(
                link,
                cfg.frame(),
                cfg.targets(),
                costs,
                cfg.scaling(),
                reference_bw_gbps=cfg.reference_bw_gbps,
                syndrome_fraction=cfg.syndrome_fraction,
                rtt_ns=cfg.rtt_ns,
            )
        except (InfeasibleCodeError, DegenerateOperatingPointError) as exc:
            log.warning("dropping link %s: %s", link.name, exc)
            continue
        out.append(m.to_record(link))
    return out


def _selections(solution) -> str:
    return "; ".join(f"{k}={v}" for k, v in sorted(solution.selection_counts().items()))


def run_assignments(cfg: ScenarioConfig, filters: Iterable[str], with_cases: bool = True, engine: str = "auto") -> List[dict]:
    """Solve every (case, filter) combination exactly and greedily."""
    if not cfg.netlist or not cfg.floorplan:
        raise ChiplinkError("assign needs both 'netlist' and 'floorplan' in the config")
    chiplets = load_floorplan(cfg.resolve(cfg.floorplan))
    nets = load_netlist(cfg.resolve(cfg.netlist))
    links = assignment_library(cfg)
    cases = [(cfg.bw_scale, cfg.dist_scale)]
    if with_cases:
        cases += [c for c in cfg.case_studies if c not in cases]
    results = []
    for bw, dist in cases:
        scaled = case_study_transform(nets, bw, dist)
        for flt in filters:
            problem = build_problem(chiplets, scaled, links, cfg.lambda_p, cfg.lambda_a, flt)
            exact = solve_exact(problem, cfg.time_budget, engine=engine)
            greedy = solve_greedy_simple(problem)
            for sol in (exact, greedy):
                violations = check_constraints(problem, sol) if sol.status.has_solution else []
                if violations:
                    raise VerificationFailed(f"{sol.method} solution violates constraints: {violations[:3]}")
                results.append({"case": _case_label(bw, dist), "bw_scale": bw, "dist_scale": dist, "filter": LinkFilter.parse(flt).value, "solution": sol})
    _normalize(results)
    return results


def _normalize(results: List[dict]) -> None:
    # each value is divided by the exact result of the same case under the
    # all-links filter when that was solved, otherwise under its own filter
    exact = {(r["case"], r["filter"]): r["solution"] for r in results if r["solution"].method == "exact"}
    for r in results:
        ref_filter = "all"
        ref = exact.get((r["case"], ref_filter))
        if ref is None or not ref.status.has_solution:
            ref_filter = r["filter"]
            ref = exact.get((r["case"], ref_filter))
        sol = r["solution"]
        if ref is not None and ref.status.has_solution and sol.status.has_solution:
            r["reference"] = f"exact/{ref_filter}"
            r["power_norm"] = sol.total_power_w / ref.total_power_w
            r["area_norm"] = sol.total_area_mm2 / ref.total_area_mm2
            r["objective_norm"] = sol.objective_value / ref.objective_value


SUMMARY_COLUMNS = (
    "case",
    "bw_scale",
    "dist_scale",
    "filter",
    "method",
    "status",
    "power_w",
    "area_mm2",
    "objective",
    "reference",
    "power_norm",
    "area_norm",
    "objective_norm",
    "selections",
    "witness",
    "seconds",
)


def summary_rows(results: List[dict]) -> List[dict]:
    rows = []
    for r in results:
        sol = r["solution"]
        ok = sol.status.has_solution
        rows.append(
            {
                "case": r["case"],
                "bw_scale": r["bw_scale"],
                "dist_scale": r["dist_scale"],
                "filter": r["filter"],
                "method": sol.method,
                "status": sol.status.value,
                "power_w": sol.total_power_w if ok else None,
                "area_mm2": sol.total_area_mm2 if ok else None,
                "objective": sol.objective_value if ok else None,
                "reference": r.get("reference"),
                "power_norm": r.get("power_norm"),
                "area_norm": r.get("area_norm"),
                "objective_norm": r.get("objective_norm"),
                "selections": _selections(sol) if ok else None,
                "witness": json.dumps(sol.witness, sort_keys=True) if sol.witness else None,
                "seconds": sol.stats.get("seconds"),
            }
        )
    return rows


def cmd_assign(cfg: ScenarioConfig, args) -> int:
    filters = [f.value for f in LinkFilter] if args.all_filters else [cfg.filter]
    results = run_assignments(cfg, filters, with_cases=not args.no_cases, engine=args.engine)
    rows = summary_rows(results)
    report = Report(cfg.out)
    report.csv("summary.csv", rows, SUMMARY_COLUMNS)
    report.csv("normalized.csv", [r for r in rows if r["power_norm"] is not None], ("case", "filter", "method", "power_norm", "area_norm", "objective_norm"))
    report.json("summary.json", {"rows": rows, "solutions": [dict(r["solution"].as_dict(), case=r["case"], filter=r["filter"]) for r in results]})
    for r in results:
        sol = r["solution"]
        report.write(f"assignments/{r['case']}_{r['filter']}_{sol.method}.csv", solution_csv(sol))
    for r in results:
        print(format_solution(r["solution"], f"[{r['case']} | {r['filter']} | {r['solution'].method}]"))
    print(
        _table(
            rows,
            ("case", "filter", "method", "status", "power_w", "area_mm2", "power_norm", "area_norm"),
            {"power_w": ".2f", "area_mm2": ".2f", "power_norm": ".3f", "area_norm": ".3f"},
        )
    )
    _print_written(report)
    return EXIT_OK


# --------------------------------------------------------------------------
# oracle-check


def cmd_oracle_check(cfg: ScenarioConfig, args) -> int:
    # inputs are validated up front so that a broken table is an input error
    cfg.load_costs()
    cfg.load_library()
    checks = []

    gate = stability_gate(GATE_GRID)
    checks.append(
        {
            "check": "stability",
            "passed": gate.passed,
            "measured": gate.max_rel_err,
            "threshold": gate.tol,
            "detail": f"{gate.n_checked} values, max rel err {gate.max_rel_err:.3e}",
            "seconds": gate.seconds,
        }
    )

    family = {c.k_symbols: c for c in rs_family()}
    if cfg.mc_code_k not in family:
        raise ChiplinkError(f"mc_code_k={cfg.mc_code_k} is not in the RS(86,K) family")
    mc = monte_carlo_agreement(cfg.mc_p_pre, family[cfg.mc_code_k], cfg.frame().with_mode("hybrid"), cfg.mc_trials, cfg.seed)
    checks.append(
        {
            "check": "monte_carlo",
            "passed": mc.passed,
            "measured": mc.z_blk,
            "threshold": mc.sigmas,
            "detail": (
                f"p_blk sim {mc.report.p_blk_fail:.5f} vs model {mc.model_p_blk:.5f} (z={mc.z_blk:+.2f}); "
                f"frame sim {mc.report.p_frame_fail:.4f} in [{mc.frame_bracket[0]:.4f}, {mc.frame_bracket[1]:.4f}]"
            ),
            "seconds": None,
        }
    )

    eq = solver_equivalence(cfg.random_instances, cfg.seed, cfg.time_budget)
    checks.append(
        {
            "check": "solver_equivalence",
            "passed": eq.passed,
            "measured": eq.max_objective_delta,
            "threshold": 0.0,
            "detail": (
                f"{eq.instances} instances ({eq.feasible} feasible): {len(eq.mismatches)} mismatches, "
                f"{len(eq.violations)} constraint violations, {len(eq.greedy_below_exact)} greedy below exact"
            ),
            "seconds": eq.seconds,
        }
    )

    report = Report(cfg.out)
    report.csv("oracle_check.csv", checks, ("check", "passed", "measured", "threshold", "detail", "seconds"))
    report.csv("stability.csv", gate.rows, ("quantity", "k", "p_pre", "value", "reference", "rel_err"))
    report.json("oracle_check.json", {"checks": checks, "monte_carlo": mc.as_dict(), "equivalence": eq.as_dict()})
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['check']:<19} {c['detail']}")
    _print_written(report)
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_VERIFY


# --------------------------------------------------------------------------
# entry point


def _print_written(report: Report) -> None:
    if report.written:
        print(f"wrote {len(report.written)} files under {report.root}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", help="scenario YAML file")
    src.add_argument("--deck", help="bundled example deck: example1, example2 or example3")
    common.add_argument("--out", help="directory for CSV/JSON outputs (nothing is written without it)")
    common.add_argument("--seed", type=int, help="random seed for simulations and random instances")
    common.add_argument("--filter", choices=[f.value for f in LinkFilter], help="link technologies allowed")
    common.add_argument("--time-budget", type=float, help="seconds per exact solve")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="chiplink", description="Chiplet link reliability, cost and assignment toolkit.")
    sub = parser.add_subparsers(dest="verb", required=True)
    sub.add_parser("ecc-sweep", parents=[common], help="code selection, goodput and ECC cost vs raw BER")
    sub.add_parser("link-metrics", parents=[common], help="ECC-corrected link metrics and FoM")
    p = sub.add_parser("assign", parents=[common], help="exact and greedy link assignment")
    p.add_argument("--all-filters", action="store_true", help="solve under all three link filters")
    p.add_argument("--no-cases", action="store_true", help="skip the configured case studies")
    p.add_argument("--engine", choices=["auto", "bnb", "milp"], default="auto", help="exact-solver engine")
    p = sub.add_parser("oracle-check", parents=[common], help="verification against reference oracles")
    p.add_argument("--trials", type=int, help="Monte Carlo frames (overrides mc_trials)")
    p.add_argument("--instances", type=int, help="random assignment instances (overrides random_instances)")
    return parser


COMMANDS = {
    "ecc-sweep": cmd_ecc_sweep,
    "link-metrics": cmd_link_metrics,
    "assign": cmd_assign,
    "oracle-check": cmd_oracle_check,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    overrides = {"out": args.out, "seed": args.seed, "filter": args.filter, "time_budget": args.time_budget}
    if args.verb == "oracle-check":
        overrides.update(mc_trials=args.trials, random_instances=args.instances)
    try:
        path = deck_path(args.deck) if args.deck else args.config
        cfg = load_config(path, **overrides)
        return COMMANDS[args.verb](cfg, args)
    except VerificationFailed as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (ChiplinkError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
