"""Verification runs that compare the production code against the oracles.

Each function returns a small result object with the measured errors and a
``passed`` flag, so the CLI and the test suite read the same numbers.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from .assignment import Status, solve_exact, solve_greedy_simple
from .oracle import (
    SimulationReport,
    brute_force_assign,
    check_constraints,
    hp_block_fail_prob,
    hp_post_fec_ber,
    random_problem,
    relative_error,
    simulate_frames,
)
from .reliability import (
    FrameConfig,
    RsCode,
    block_fail_prob,
    frame_fail_prob,
    post_fec_ber,
    rs_family,
    symbol_error_prob,
)

#: Acceptance threshold of the stability gate.
STABILITY_TOL = 1e-12
#: Values below this are not part of the gate.
STABILITY_FLOOR = 1e-27
#: Default p_pre grid of the gate.
GATE_GRID = (1e-2, 1e-3, 1e-4, 1e-5)
#: Objectives of exact and exhaustive solves must agree to this relative slack.
OBJECTIVE_RTOL = 1e-9
#: Monte Carlo agreement in standard errors.
MC_SIGMAS = 3.0


@dataclass
class StabilityResult:
    rows: List[dict]
    max_rel_err: float
    seconds: float
    tol: float = STABILITY_TOL

    @property
    def passed(self) -> bool:
        return self.max_rel_err < self.tol

    @property
    def n_checked(self) -> int:
        return len(self.rows)


def stability_gate(
    p_grid: Sequence[float] = GATE_GRID,
    family: Optional[Sequence[RsCode]] = None,
    floor: float = STABILITY_FLOOR,
) -> StabilityResult:
    """Block-fail probability and post-FEC BER against exact rational references.

    Only reference values at or above ``floor`` are compared.
    """
    start = time.perf_counter()
    family = list(family) if family is not None else rs_family()
    rows = []
    for code in family:
        for p in p_grid:
            pairs = (
                ("block_fail_prob", block_fail_prob(symbol_error_prob(p, code.symbol_bits), code), hp_block_fail_prob(p, code)),
                ("post_fec_ber", post_fec_ber(p, code), hp_post_fec_ber(p, code)),
            )
            for quantity, approx, ref in pairs:
                if ref < floor:
                    continue
                rows.append(
                    {
                        "quantity": quantity,
                        "k": code.k_symbols,
                        "p_pre": p,
                        "value": approx,
                        "reference": float(ref),
                        "rel_err": relative_error(approx, ref),
                    }
                )
    worst = max((r["rel_err"] for r in rows), default=0.0)
    return StabilityResult(rows, worst, time.perf_counter() - start)


@dataclass
class MonteCarloResult:
    report: SimulationReport
    model_p_blk: float
    model_p_frame: float
    z_blk: float
    frame_bracket: tuple
    sigmas: float = MC_SIGMAS

    @property
    def blk_passed(self) -> bool:
        return abs(self.z_blk) <= self.sigmas

    @property
    def frame_passed(self) -> bool:
        lo, hi = self.frame_bracket
        slack = self.sigmas * self.report.se_frame_fail
        return lo - slack <= self.report.p_frame_fail <= hi + slack

    @property
    def passed(self) -> bool:
        return self.blk_passed and self.frame_passed

    def as_dict(self) -> dict:
        out = self.report.as_dict()
        out.update(
            model_p_blk=self.model_p_blk,
            model_p_frame=self.model_p_frame,
            z_blk=self.z_blk,
            frame_bracket=list(self.frame_bracket),
            passed=self.passed,
        )
        return out


def monte_carlo_agreement(
    p_pre: float,
    code: RsCode,
    frame: FrameConfig,
    trials: int,
    seed: int = 0,
    sigmas: float = MC_SIGMAS,
) -> MonteCarloResult:
    """Simulated block and frame failure rates against the analytic model.

    The block rate must sit within ``sigmas`` standard errors of the model.
    The simulator sends whole codewords, so the frame rate is compared with
    the floor/ceiling bracket of codewords per frame, widened by the same
    number of standard errors.
    """
    rep = simulate_frames(p_pre, code, frame, trials, seed)
    model_blk = block_fail_prob(symbol_error_prob(p_pre, code.symbol_bits), code)
    se = math.sqrt(model_blk * (1 - model_blk) / rep.codewords) if 0 < model_blk < 1 else 0.0
    diff = rep.p_blk_fail - model_blk
    z = diff / se if se > 0 else (0.0 if diff == 0 else math.inf)
    return MonteCarloResult(rep, model_blk, frame_fail_prob(p_pre, code, frame), z, rep.frame_fail_bracket(model_blk), sigmas)


@dataclass
class EquivalenceResult:
    instances: int
    feasible: int
    mismatches: List[dict] = field(default_factory=list)
    violations: List[dict] = field(default_factory=list)
    greedy_below_exact: List[dict] = field(default_factory=list)
    max_objective_delta: float = 0.0
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return not (self.mismatches or self.violations or self.greedy_below_exact)

    def as_dict(self) -> dict:
        return {
            "instances": self.instances,
            "feasible": self.feasible,
            "mismatches": self.mismatches,
            "violations": self.violations,
            "greedy_below_exact": self.greedy_below_exact,
            "max_objective_delta": self.max_objective_delta,
            "seconds": self.seconds,
            "passed": self.passed,
        }


def solver_equivalence(instances: int, seed: int = 0, time_budget: Optional[float] = None) -> EquivalenceResult:
    """Exact solver against exhaustive enumeration on seeded random instances.

    Instance ``i`` uses seed ``seed + i`` and edge tightness ``1 + i % 3``, so
    about half of the instances are shoreline- or reach-infeasible.
    """
    start = time.perf_counter()
    out = EquivalenceResult(instances, 0)
    for i in range(instances):
        problem = random_problem(seed + i, tightness=1.0 + i % 3)
        exact = solve_exact(problem, time_budget)
        brute = brute_force_assign(problem)
        greedy = solve_greedy_simple(problem)
        tag = {"instance": i, "seed": seed + i}
        if exact.status.has_solution != brute.status.has_solution:
            out.mismatches.append({**tag, "exact": exact.status.value, "brute_force": brute.status.value})
            continue
        if not brute.status.has_solution:
            continue
        out.feasible += 1
        if exact.status is not Status.OPTIMAL:
            out.mismatches.append({**tag, "exact": exact.status.value, "brute_force": brute.status.value})
        delta = abs(exact.objective_value - brute.objective_value)
        scale = max(abs(brute.objective_value), 1e-300)
        out.max_objective_delta = max(out.max_objective_delta, delta)
        if delta > OBJECTIVE_RTOL * scale:
            out.mismatches.append({**tag, "exact": exact.objective_value, "brute_force": brute.objective_value})
        problems = check_constraints(problem, exact)
        if problems:
            out.violations.append({**tag, "violations": problems})
        if greedy.status.has_solution and greedy.objective_value < exact.objective_value * (1 - OBJECTIVE_RTOL):
            out.greedy_below_exact.append({**tag, "greedy": greedy.objective_value, "exact": exact.objective_value})
    out.seconds = time.perf_counter() - start
    return out
