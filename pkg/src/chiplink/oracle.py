"""Independent references for testing the main modules.

Nothing here calls into the production formulas. Probabilities are computed
with exact rational arithmetic, assignments are enumerated exhaustively and
checked against the constraints written out again from the problem data, and
frames are simulated bit by bit.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .assignment import (
    AssignmentProblem,
    AssignmentSolution,
    Chiplet,
    LinkFilter,
    Net,
    NetAssignment,
    Status,
    build_problem,
)
from .exceptions import DomainError
from .links import LinkKind, LinkRecord
from .reliability import FrameConfig, RsCode

Number = Union[int, float, str, Fraction, Decimal]

MAX_BRUTE_NETS = 10
MAX_BRUTE_LINKS = 6


@dataclass(frozen=True)
class PrecisionConfig:
    working_digits: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.working_digits < 50:
            raise DomainError(f"working_digits must be >= 50 to resolve 1e-27 tails, got {self.working_digits}")


def exact(p: Number) -> Fraction:
    """Exact rational value of ``p``; floats convert without rounding."""
    if isinstance(p, Fraction):
        value = p
    elif isinstance(p, str):
        value = Fraction(Decimal(p))
    else:
        value = Fraction(p)
    if not 0 <= value <= 1:
        raise DomainError(f"probability must lie in [0, 1], got {p!r}")
    return value


def hp_symbol_error_prob(p: Number, symbol_bits: int = 8) -> Fraction:
    return 1 - (1 - exact(p)) ** symbol_bits


def _binom_numerators(n: int, q: Fraction, lo: int, hi: int):
    """Integer numerators ``C(n,i) a^i (b-a)^(n-i)`` over the shared denominator ``b^n``.

    Keeping one denominator avoids a gcd reduction per term.
    """
    a, b = q.numerator, q.denominator
    return b**n, [(i, math.comb(n, i) * a**i * (b - a) ** (n - i)) for i in range(lo, hi + 1)]


def hp_binom_tail(n: int, p: Number, t: int) -> Fraction:
    """``P[X > t]`` for ``X ~ Binomial(n, p)``, exactly."""
    q = exact(p)
    if t >= n:
        return Fraction(0)
    den, terms = _binom_numerators(n, q, max(t + 1, 0), n)
    return Fraction(sum(v for _, v in terms), den)


def hp_binom_head(n: int, p: Number, t: int) -> Fraction:
    """``P[X <= t]``, the complement of ``hp_binom_tail``."""
    q = exact(p)
    if t < 0:
        return Fraction(0)
    den, terms = _binom_numerators(n, q, 0, min(t, n))
    return Fraction(sum(v for _, v in terms), den)


def hp_block_fail_prob(p_pre: Number, code: RsCode) -> Fraction:
    return hp_binom_tail(code.n_symbols, hp_symbol_error_prob(p_pre, code.symbol_bits), code.t_correctable)


def hp_post_fec_ber(p_pre: Number, code: RsCode) -> Fraction:
    """Expected wrong-bit fraction, ``sum_{i>t} i/(2N) P[X=i]`` over symbol errors."""
    n, t = code.n_symbols, code.t_correctable
    q = hp_symbol_error_prob(p_pre, code.symbol_bits)
    den, terms = _binom_numerators(n, q, t + 1, n)
    return Fraction(sum(i * v for i, v in terms), den * 2 * n)


def to_decimal(value: Fraction, digits: int = 50) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = digits
        return Decimal(value.numerator) / Decimal(value.denominator)


def relative_error(approx: float, reference: Fraction) -> float:
    """``|approx - ref| / |ref|`` evaluated exactly, then rounded to float."""
    if reference == 0:
        return 0.0 if approx == 0 else math.inf
    return float(abs(Fraction(approx) - reference) / abs(reference))


# --------------------------------------------------------------------------
# assignment


def _edge_budgets(chiplets: Sequence[Chiplet]) -> dict:
    out = {}
    for chip in chiplets:
        for edge, width in chip.edges:
            out[chip.id + "\x00" + edge] = width
    return out


def _allowed(link: LinkRecord, link_filter: LinkFilter) -> bool:
    if link_filter is LinkFilter.ELECTRICAL_ONLY:
        return link.link_kind is LinkKind.ELECTRICAL
    if link_filter is LinkFilter.OPTICAL_ONLY:
        return link.link_kind is LinkKind.OPTICAL
    return True


def check_constraints(problem: AssignmentProblem, solution: AssignmentSolution, *, width_tol: float = 1e-9) -> List[str]:
    """Every constraint violation of ``solution``, as readable strings.

    Checks one link per net, reach, the link filter, minimum width and the
    per-edge shoreline sums, all recomputed from the problem's raw inputs.
    """
    problems = []
    links = {link.name: link for link in problem.links}
    budgets = _edge_budgets(problem.chiplets)
    used = {key: 0.0 for key in budgets}
    by_net = {}
    for a in solution.assignments:
        if a.net_id in by_net:
            problems.append(f"net {a.net_id}: assigned more than once")
        by_net[a.net_id] = a
    for net in problem.nets:
        a = by_net.get(net.id)
        if a is None:
            problems.append(f"net {net.id}: no link assigned")
            continue
        link = links.get(a.link)
        if link is None:
            problems.append(f"net {net.id}: unknown link {a.link!r}")
            continue
        if not _allowed(link, problem.link_filter):
            problems.append(f"net {net.id}: link {link.name} excluded by filter {problem.link_filter.value}")
        if net.distance_mm > link.reach_mm:
            problems.append(f"net {net.id}: distance {net.distance_mm} mm exceeds reach {link.reach_mm} mm of {link.name}")
        if a.width_mm * link.shoreline_gbps_per_mm < net.bw_req_gbps * (1 - 1e-12):
            problems.append(f"net {net.id}: width {a.width_mm} mm carries less than {net.bw_req_gbps} Gbps")
        for chip, edge in net.endpoints:
            key = chip + "\x00" + edge
            if key not in used:
                problems.append(f"net {net.id}: endpoint {chip}:{edge} does not exist")
            else:
                used[key] += a.width_mm
    extra = set(by_net) - {net.id for net in problem.nets}
    for net_id in sorted(extra):
        problems.append(f"net {net_id}: not part of the problem")
    for key, total in used.items():
        if total > budgets[key] + width_tol:
            chip, edge = key.split("\x00")
            problems.append(f"edge {chip}:{edge}: {total:.6g} mm used of {budgets[key]:.6g} mm")
    return problems


def _net_cost(link: LinkRecord, bw: float, lambda_p: float, lambda_a: float) -> Tuple[float, float, float]:
    watts = link.energy_pj_per_bit * bw * 1e-3
    mm2 = bw / link.areal_gbps_per_mm2
    return watts, mm2, watts / lambda_p + mm2 / lambda_a


def brute_force_assign(problem: AssignmentProblem) -> AssignmentSolution:
    """Cheapest feasible tuple by exhaustive enumeration.

    Ties within a relative 1e-12 of the minimum go to the lexicographically
    smallest tuple of link names in net order. Enumeration is vectorized over
    the trailing nets and looped over the leading ones.
    """
    nets = problem.nets
    if len(nets) > MAX_BRUTE_NETS or len(problem.links) > MAX_BRUTE_LINKS:
        raise DomainError(
            f"enumeration bound is {MAX_BRUTE_NETS} nets and {MAX_BRUTE_LINKS} links, "
            f"got {len(nets)} and {len(problem.links)}"
        )
    if not nets:
        return AssignmentSolution(Status.OPTIMAL, (), 0.0, 0.0, 0.0, method="brute-force")
    budgets = _edge_budgets(problem.chiplets)
    edge_keys = sorted(budgets)
    edge_pos = {k: i for i, k in enumerate(edge_keys)}
    cap = np.array([budgets[k] for k in edge_keys])

    cands = []  # per net: list of (link, width, watts, mm2, cost)
    for net in nets:
        row = []
        for link in problem.links:
            if _allowed(link, problem.link_filter) and net.distance_mm <= link.reach_mm:
                watts, mm2, cost = _net_cost(link, net.bw_req_gbps, problem.lambda_p, problem.lambda_a)
                row.append((link, net.bw_req_gbps / link.shoreline_gbps_per_mm, watts, mm2, cost))
        if not row:
            return AssignmentSolution(Status.INFEASIBLE, witness={"constraint": "reach", "net": net.id}, method="brute-force")
        cands.append(row)

    # per net, per option: cost and the width it adds to every edge
    costs = [np.array([c[4] for c in row]) for row in cands]
    loads = []
    for net, row in zip(nets, cands):
        mat = np.zeros((len(row), len(edge_keys)))
        for k, c in enumerate(row):
            for chip, edge in net.endpoints:
                mat[k, edge_pos[chip + "\x00" + edge]] += c[1]
        loads.append(mat)

    split = max(0, len(nets) - 6)
    tail = range(split, len(nets))
    grids = np.meshgrid(*[np.arange(len(cands[j])) for j in tail], indexing="ij")
    tail_idx = np.stack([g.ravel() for g in grids], axis=1) if grids else np.zeros((1, 0), dtype=int)
    tail_cost = sum((costs[j][tail_idx[:, i]] for i, j in enumerate(tail)), np.zeros(len(tail_idx)))
    tail_load = sum((loads[j][tail_idx[:, i]] for i, j in enumerate(tail)), np.zeros((len(tail_idx), len(edge_keys))))

    best_val = math.inf
    winners: List[Tuple[int, ...]] = []
    for head in itertools.product(*[range(len(cands[j])) for j in range(split)]):
        head_cost = sum(costs[j][k] for j, k in enumerate(head))
        head_load = sum((loads[j][k] for j, k in enumerate(head)), np.zeros(len(edge_keys)))
        ok = np.all(tail_load + head_load <= cap + 1e-9, axis=1)
        if not ok.any():
            continue
        total = tail_cost + head_cost
        total = np.where(ok, total, np.inf)
        low = float(total.min())
        if low > best_val * (1 + 1e-12):
            continue
        if low < best_val * (1 - 1e-12):
            winners = []
        best_val = min(best_val, low)
        for r in np.flatnonzero(total <= low * (1 + 1e-12)):
            winners.append(tuple(head) + tuple(int(v) for v in tail_idx[r]))

    if not winners:
        return AssignmentSolution(Status.INFEASIBLE, witness={"constraint": "shoreline"}, method="brute-force")
    # exact objective for the surviving tuples, then the lexicographic tie-break
    scored = []
    for tup in winners:
        obj = math.fsum(cands[j][k][4] for j, k in enumerate(tup))
        names = tuple(cands[j][k][0].name for j, k in enumerate(tup))
        scored.append((obj, names, tup))
    best = min(s[0] for s in scored)
    tied = [s for s in scored if s[0] <= best * (1 + 1e-12)]
    obj, _, tup = min(tied, key=lambda s: s[1])
    rows = tuple(
        NetAssignment(net.id, cands[j][k][0].name, cands[j][k][1], net.endpoints, cands[j][k][2], cands[j][k][3], cands[j][k][4])
        for j, (net, k) in enumerate(zip(nets, tup))
    )
    power = math.fsum(r.power_w for r in rows)
    area = 0.5 * math.fsum(r.area_mm2 for r in rows)
    return AssignmentSolution(Status.OPTIMAL, rows, obj, power, area, method="brute-force")


def random_problem(
    seed: int,
    n_nets: Optional[int] = None,
    n_links: Optional[int] = None,
    *,
    max_nets: int = 8,
    max_links: int = 6,
    link_filter: Union[str, LinkFilter] = LinkFilter.ALL,
    tightness: float = 1.0,
) -> AssignmentProblem:
    """Seeded random instance; ``tightness`` > 1 shrinks the edge budgets."""
    rng = np.random.default_rng(seed)
    n_nets = int(rng.integers(1, max_nets + 1)) if n_nets is None else n_nets
    n_links = int(rng.integers(1, max_links + 1)) if n_links is None else n_links
    n_chips = int(rng.integers(2, 5))
    chips = []
    for c in range(n_chips):
        widths = rng.uniform(0.3, 3.0, size=4) / tightness
        chips.append(Chiplet(f"c{c}", tuple(zip("NESW", (round(float(w), 3) for w in widths)))))
    links = []
    # usually one link reaches every net, so most instances are reach-feasible
    long_link = int(rng.integers(n_links)) if rng.random() < 0.85 else -1
    for i in range(n_links):
        reach = 150.0 if i == long_link else float(rng.choice([0.5, 2.0, 10.0, 30.0, 100.0]) * rng.uniform(0.8, 1.2))
        links.append(
            LinkRecord(
                name=f"L{i}",
                reach_mm=round(reach, 2),
                process_nm=7,
                raw_ber=1e-15,
                link_kind="E" if rng.random() < 0.6 else "O",
                shoreline_gbps_per_mm=round(float(10 ** rng.uniform(2.3, 4.0)), 1),
                areal_gbps_per_mm2=round(float(10 ** rng.uniform(2.3, 3.8)), 1),
                energy_pj_per_bit=round(float(10 ** rng.uniform(-1.2, 0.6)), 3),
            )
        )
    nets = []
    for j in range(n_nets):
        a, b = rng.choice(n_chips, size=2, replace=False)
        ea, eb = rng.choice(list("NESW"), size=2)
        nets.append(
            Net(
                f"n{j}",
                ((f"c{a}", str(ea)), (f"c{b}", str(eb))),
                round(float(rng.choice([0.3, 1.5, 8.0, 25.0, 60.0]) * rng.uniform(0.5, 1.5)), 2),
                round(float(10 ** rng.uniform(1.5, 3.3)), 1),
            )
        )
    return build_problem(chips, nets, links, round(float(rng.uniform(1, 100)), 2), round(float(rng.uniform(10, 1000)), 2), link_filter)


# --------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class SimulationReport:
    p_pre: float
    code: str
    frames: int
    codewords_per_frame: int
    b_eff: float
    codewords: int
    block_failures: int
    frame_failures: int

    @property
    def p_blk_fail(self) -> float:
        return self.block_failures / self.codewords

    @property
    def se_blk_fail(self) -> float:
        p = self.p_blk_fail
        return math.sqrt(p * (1 - p) / self.codewords)

    @property
    def p_frame_fail(self) -> float:
        return self.frame_failures / self.frames

    @property
    def se_frame_fail(self) -> float:
        p = self.p_frame_fail
        return math.sqrt(p * (1 - p) / self.frames)

    def frame_fail_bracket(self, p_blk: float) -> Tuple[float, float]:
        """Frame failure for the floor and ceiling of the codewords per frame.

        The analytic model spans a fractional number of codewords per frame;
        the simulator draws whole ones, so its frame rate sits near the upper
        end of this bracket.
        """
        lo = -math.expm1(math.floor(self.b_eff) * math.log1p(-p_blk)) if p_blk < 1 else 1.0
        hi = -math.expm1(self.codewords_per_frame * math.log1p(-p_blk)) if p_blk < 1 else 1.0
        return lo, hi

    def as_dict(self) -> dict:
        return {
            "p_pre": self.p_pre,
            "code": self.code,
            "frames": self.frames,
            "codewords_per_frame": self.codewords_per_frame,
            "b_eff": self.b_eff,
            "p_blk_fail": self.p_blk_fail,
            "se_blk_fail": self.se_blk_fail,
            "p_frame_fail": self.p_frame_fail,
            "se_frame_fail": self.se_frame_fail,
        }


def simulate_frames(
    p_pre: float,
    code: RsCode,
    frame: FrameConfig,
    trials: int = 100_000,
    seed: int = 0,
    *,
    chunk_frames: int = 20_000,
) -> SimulationReport:
    """Simulate i.i.d. bit errors over whole frames of RS codewords.

    Each frame carries ``ceil(D / K)`` codewords of ``N * m`` bits. Error
    positions are drawn as geometric gaps along the bit stream; a codeword
    fails when more than ``t`` distinct symbols are hit.
    """
    if not 0 <= p_pre <= 1:
        raise DomainError(f"p_pre must lie in [0, 1], got {p_pre!r}")
    if trials < 1:
        raise DomainError("trials must be positive")
    b_eff = frame.data_bytes * 8 / (code.k_symbols * code.symbol_bits)
    per_frame = math.ceil(b_eff)
    n_sym, m, t = code.n_symbols, code.symbol_bits, code.t_correctable
    cw_bits = n_sym * m
    total_cw = trials * per_frame
    if p_pre == 0:
        return SimulationReport(p_pre, str(code), trials, per_frame, b_eff, total_cw, 0, 0)
    if p_pre == 1:
        fails = total_cw if n_sym > t else 0
        return SimulationReport(p_pre, str(code), trials, per_frame, b_eff, total_cw, fails, trials if fails else 0)

    rng = np.random.default_rng(seed)
    blk_fail = 0
    frm_fail = 0
    done = 0
    while done < trials:
        frames = min(chunk_frames, trials - done)
        n_cw = frames * per_frame
        n_bits = n_cw * cw_bits
        # draw gaps until the stream is covered
        positions = []
        pos = -1
        while True:
            need = max(int((n_bits - pos) * p_pre * 1.05) + 64, 64)
            gaps = rng.geometric(p_pre, size=need)
            run = pos + np.cumsum(gaps)
            positions.append(run[run < n_bits])
            pos = int(run[-1])
            if pos >= n_bits:
                break
        hits = np.concatenate(positions)
        symbols = hits // m
        if symbols.size:
            distinct = symbols[np.concatenate(([True], np.diff(symbols) != 0))]
            per_cw = np.bincount(distinct // n_sym, minlength=n_cw)
        else:
            per_cw = np.zeros(n_cw, dtype=np.int64)
        failed = per_cw > t
        blk_fail += int(failed.sum())
        frm_fail += int(failed.reshape(frames, per_frame).any(axis=1).sum())
        done += frames
    return SimulationReport(p_pre, str(code), trials, per_frame, b_eff, total_cw, blk_fail, frm_fail)
