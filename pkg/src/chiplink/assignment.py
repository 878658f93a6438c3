"""Link-technology assignment for inter-chiplet nets.

Every net picks exactly one link from the library. The chosen link must reach
the net's distance and its minimum width ``bw / shoreline`` is charged to the
shoreline budget of both endpoint edges. The objective is the normalized sum
of link power and transceiver area,

    sum_n  E_l * BW_n / lambda_p  +  (BW_n / areal_l) / lambda_a

with power in W and area in mm^2. ``solve_exact`` is a branch-and-bound over
per-net choices; ``solve_greedy_simple`` is the independent per-net baseline.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import DanglingEndpointError, DomainError, InputFormatError, InvariantError
from .links import LinkKind, LinkRecord

log = logging.getLogger(__name__)

#: Absolute slack (mm) when comparing shoreline usage against a budget.
WIDTH_TOL_MM = 1e-9
#: Components at least this large get an LP relaxation bound at each node.
LP_MIN_NETS = 12

EdgeKey = Tuple[str, str]


class LinkFilter(str, Enum):
    ALL = "all"
    ELECTRICAL_ONLY = "electrical"
    OPTICAL_ONLY = "optical"

    @classmethod
    def parse(cls, value) -> "LinkFilter":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {
            "all": cls.ALL,
            "electrical": cls.ELECTRICAL_ONLY,
            "electrical_only": cls.ELECTRICAL_ONLY,
            "e": cls.ELECTRICAL_ONLY,
            "optical": cls.OPTICAL_ONLY,
            "optical_only": cls.OPTICAL_ONLY,
            "o": cls.OPTICAL_ONLY,
        }
        if key not in aliases:
            raise ValueError(f"unknown link filter {value!r}; expected all, electrical or optical")
        return aliases[key]

    def admits(self, link: LinkRecord) -> bool:
        if self is LinkFilter.ALL:
            return True
        if self is LinkFilter.ELECTRICAL_ONLY:
            return link.link_kind is LinkKind.ELECTRICAL
        return link.link_kind is LinkKind.OPTICAL


class Status(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    # time budget ran out before any feasible assignment was found
    UNKNOWN = "unknown"

    @property
    def has_solution(self) -> bool:
        return self in (Status.OPTIMAL, Status.FEASIBLE)


@dataclass(frozen=True)
class Chiplet:
    id: str
    edges: Tuple[Tuple[str, float], ...]

    def __post_init__(self):
        if not str(self.id).strip():
            raise InvariantError("chiplet id must be non-empty")
        items = tuple(self.edges.items()) if isinstance(self.edges, dict) else tuple(self.edges)
        edges = tuple((str(e), float(w)) for e, w in items)
        seen = set()
        for edge, width in edges:
            if edge in seen:
                raise InvariantError(f"chiplet {self.id!r}: duplicate edge id {edge!r}")
            if not (width > 0 and math.isfinite(width)):
                raise InvariantError(f"chiplet {self.id!r}: edge {edge!r} width must be positive, got {width!r}")
            seen.add(edge)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_die(cls, id: str, width_mm: float, height_mm: float) -> "Chiplet":
        return cls(id, half_perimeter_edges(width_mm, height_mm))

    def edge_widths(self) -> Dict[str, float]:
        return dict(self.edges)


def half_perimeter_edges(width_mm: float, height_mm: float) -> Tuple[Tuple[str, float], ...]:
    """Edge budgets N/E/S/W from die dimensions.

    Half of the perimeter is usable for I/O, split evenly so each side
    contributes half of its length.
    """
    if not (width_mm > 0 and height_mm > 0):
        raise DomainError(f"die dimensions must be positive, got {width_mm!r} x {height_mm!r}")
    return (("N", width_mm / 2), ("E", height_mm / 2), ("S", width_mm / 2), ("W", height_mm / 2))


@dataclass(frozen=True)
class Net:
    id: str
    endpoints: Tuple[EdgeKey, EdgeKey]
    distance_mm: float
    bw_req_gbps: float

    def __post_init__(self):
        if not str(self.id).strip():
            raise InvariantError("net id must be non-empty")
        if len(self.endpoints) != 2:
            raise InvariantError(f"net {self.id!r}: needs exactly two endpoints")
        ends = tuple((str(c), str(e)) for c, e in self.endpoints)
        object.__setattr__(self, "endpoints", ends)
        # zero distance is allowed: abutted dies, every link reaches
        if not (self.distance_mm >= 0 and math.isfinite(self.distance_mm)):
            raise InvariantError(f"net {self.id!r}: distance must be >= 0, got {self.distance_mm!r}")
        if not (self.bw_req_gbps > 0 and math.isfinite(self.bw_req_gbps)):
            raise InvariantError(f"net {self.id!r}: bandwidth must be positive, got {self.bw_req_gbps!r}")


def case_study_transform(nets: Sequence[Net], bw_scale: float = 1.0, dist_scale: float = 1.0) -> List[Net]:
    """Scale every net's bandwidth and distance."""
    if not (bw_scale > 0 and dist_scale > 0):
        raise DomainError(f"scales must be positive, got bw={bw_scale!r}, dist={dist_scale!r}")
    return [replace(n, bw_req_gbps=n.bw_req_gbps * bw_scale, distance_mm=n.distance_mm * dist_scale) for n in nets]


@dataclass(frozen=True)
class LinkOption:
    """One reach-feasible link for one net, with its precomputed cost."""

    link: LinkRecord
    width_mm: float
    power_w: float
    area_mm2: float
    cost: float

    @property
    def name(self) -> str:
        return self.link.name


def option_terms(link: LinkRecord, bw_gbps: float, lambda_p: float, lambda_a: float) -> Tuple[float, float, float]:
    """(power W, area mm^2, normalized cost) of carrying ``bw_gbps`` on ``link``."""
    power = link.energy_pj_per_bit * bw_gbps * 1e-3
    area = bw_gbps / link.areal_gbps_per_mm2
    return power, area, power / lambda_p + area / lambda_a


@dataclass
class AssignmentProblem:
    chiplets: Tuple[Chiplet, ...]
    nets: Tuple[Net, ...]
    links: Tuple[LinkRecord, ...]
    lambda_p: float
    lambda_a: float
    link_filter: LinkFilter
    capacities: Dict[EdgeKey, float]
    options: Tuple[Tuple[LinkOption, ...], ...]
    warnings: Dict[str, str] = field(default_factory=dict)

    @property
    def n_nets(self) -> int:
        return len(self.nets)

    def unreachable_nets(self) -> List[str]:
        return [net.id for net, opts in zip(self.nets, self.options) if not opts]

    def with_lambdas(self, lambda_p: float, lambda_a: float) -> "AssignmentProblem":
        return build_problem(self.chiplets, self.nets, self.links, lambda_p, lambda_a, self.link_filter)


def build_problem(
    chiplets: Sequence[Chiplet],
    nets: Sequence[Net],
    links: Sequence[LinkRecord],
    lambda_p: float,
    lambda_a: float,
    link_filter: Union[str, LinkFilter] = LinkFilter.ALL,
) -> AssignmentProblem:
    """Validate inputs and precompute every net's reach-feasible options.

    Options are sorted by cost and then link name. A net with no feasible
    option gets a warning entry; solving such a problem reports infeasibility.
    """
    if not (lambda_p > 0 and lambda_a > 0):
        raise DomainError(f"lambda_p and lambda_a must be positive, got {lambda_p!r}, {lambda_a!r}")
    link_filter = LinkFilter.parse(link_filter)
    capacities: Dict[EdgeKey, float] = {}
    ids = set()
    for chip in chiplets:
        if chip.id in ids:
            raise InvariantError(f"duplicate chiplet id {chip.id!r}")
        ids.add(chip.id)
        for edge, width in chip.edges:
            capacities[(chip.id, edge)] = width
    names = [link.name for link in links]
    if len(set(names)) != len(names):
        raise InvariantError("link names must be unique")
    net_ids = set()
    for net in nets:
        if net.id in net_ids:
            raise InvariantError(f"duplicate net id {net.id!r}")
        net_ids.add(net.id)
        for end in net.endpoints:
            if end not in capacities:
                raise DanglingEndpointError(f"net {net.id!r} references unknown edge {end[0]}:{end[1]}")
    usable = [link for link in links if link_filter.admits(link)]
    options = []
    warn = {}
    for net in nets:
        opts = []
        for link in usable:
            if net.distance_mm > link.reach_mm:
                continue
            power, area, cost = option_terms(link, net.bw_req_gbps, lambda_p, lambda_a)
            opts.append(LinkOption(link, net.bw_req_gbps / link.shoreline_gbps_per_mm, power, area, cost))
        opts.sort(key=lambda o: (o.cost, o.name))
        if not opts:
            warn[net.id] = f"no {link_filter.value} link reaches {net.distance_mm:g} mm"
            log.debug("net %s: %s", net.id, warn[net.id])
        options.append(tuple(opts))
    return AssignmentProblem(
        chiplets=tuple(chiplets),
        nets=tuple(nets),
        links=tuple(links),
        lambda_p=float(lambda_p),
        lambda_a=float(lambda_a),
        link_filter=link_filter,
        capacities=capacities,
        options=tuple(options),
        warnings=warn,
    )


@dataclass(frozen=True)
class NetAssignment:
    net_id: str
    link: str
    width_mm: float
    endpoints: Tuple[EdgeKey, EdgeKey]
    power_w: float
    area_mm2: float
    cost: float


@dataclass
class AssignmentSolution:
    status: Status
    assignments: Tuple[NetAssignment, ...] = ()
    objective_value: float = math.nan
    total_power_w: float = math.nan
    total_area_mm2: float = math.nan
    witness: Optional[dict] = None
    method: str = ""
    stats: Dict[str, float] = field(default_factory=dict)

    def link_of(self, net_id: str) -> str:
        for a in self.assignments:
            if a.net_id == net_id:
                return a.link
        raise KeyError(net_id)

    def choices(self) -> Tuple[str, ...]:
        return tuple(a.link for a in self.assignments)

    def selection_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for a in self.assignments:
            counts[a.link] = counts.get(a.link, 0) + 1
        return counts

    def edge_usage(self) -> Dict[EdgeKey, float]:
        usage: Dict[EdgeKey, float] = {}
        for a in self.assignments:
            for end in a.endpoints:
                usage[end] = usage.get(end, 0.0) + a.width_mm
        return usage

    def as_dict(self) -> dict:
        return {
            "status": self.status.value,
            "method": self.method,
            "objective_value": self.objective_value,
            "total_power_w": self.total_power_w,
            "total_area_mm2": self.total_area_mm2,
            "witness": self.witness,
            "stats": dict(self.stats),
            "assignments": [
                {
                    "net": a.net_id,
                    "link": a.link,
                    "width_mm": a.width_mm,
                    "endpoints": [f"{c}:{e}" for c, e in a.endpoints],
                    "power_w": a.power_w,
                    "area_mm2": a.area_mm2,
                }
                for a in self.assignments
            ],
        }


def report_totals(solution: AssignmentSolution, problem: Optional[AssignmentProblem] = None) -> Tuple[float, float]:
    """Total link power (W) and transceiver area (mm^2) of a solution.

    Area is reported as half of the summed per-net ``BW / areal`` values.
    """
    if solution.assignments and not solution.status.has_solution:
        raise DomainError("totals need a feasible solution")
    power = math.fsum(a.power_w for a in solution.assignments)
    area = 0.5 * math.fsum(a.area_mm2 for a in solution.assignments)
    return power, area


def _make_solution(problem, picks: Sequence[LinkOption], status, method, stats, witness=None) -> AssignmentSolution:
    rows = tuple(
        NetAssignment(net.id, opt.name, opt.width_mm, net.endpoints, opt.power_w, opt.area_mm2, opt.cost)
        for net, opt in zip(problem.nets, picks)
    )
    sol = AssignmentSolution(
        status=status,
        assignments=rows,
        objective_value=math.fsum(opt.cost for opt in picks),
        witness=witness,
        method=method,
        stats=stats,
    )
    sol.total_power_w, sol.total_area_mm2 = report_totals(sol)
    return sol


def _no_solution(status, method, witness, stats) -> AssignmentSolution:
    return AssignmentSolution(status=status, witness=witness, method=method, stats=stats)


def _reach_witness(problem) -> Optional[dict]:
    for net, opts in zip(problem.nets, problem.options):
        if not opts:
            return {
                "constraint": "reach",
                "net": net.id,
                "distance_mm": net.distance_mm,
                "filter": problem.link_filter.value,
            }
    return None


# --------------------------------------------------------------------------
# exact search


def _pareto(opts: Sequence[LinkOption]) -> List[LinkOption]:
    """Drop options that cost no less and need no less width than an earlier one."""
    kept: List[LinkOption] = []
    narrowest = math.inf
    for opt in opts:
        if opt.width_mm < narrowest:
            kept.append(opt)
            narrowest = opt.width_mm
    return kept


class _Component:
    """Branch-and-bound over the nets coupled through binding edges."""

    def __init__(self, nets, options, incidence, capacity, deadline, use_lp):
        self.nets = nets  # global net indices
        self.options = options  # per local net, Pareto options sorted by (cost, name)
        self.incidence = incidence  # per local net, tuple of (local edge, multiplicity)
        self.capacity = capacity
        self.deadline = deadline
        self.use_lp = use_lp and len(nets) >= LP_MIN_NETS
        self.best_cost = math.inf
        self.best: Optional[List[int]] = None
        self.nodes = 0
        self.lp_calls = 0
        self.timed_out = False
        self.exact = True
        # nets with identical options and incidence are interchangeable; their
        # choices are kept non-decreasing in net order to cut symmetric subtrees
        self.prev = [-1] * len(nets)
        self.next = [-1] * len(nets)
        last: Dict[tuple, int] = {}
        for j in range(len(nets)):
            key = (incidence[j], tuple((o.cost, o.width_mm) for o in options[j]))
            if key in last:
                self.prev[j] = last[key]
                self.next[last[key]] = j
            last[key] = j

    def _window(self, j, choice) -> Tuple[int, int]:
        lo, hi = 0, len(self.options[j]) - 1
        i = self.prev[j]
        while i >= 0 and choice[i] < 0:
            i = self.prev[i]
        if i >= 0:
            lo = choice[i]
        i = self.next[j]
        while i >= 0 and choice[i] < 0:
            i = self.next[i]
        if i >= 0:
            hi = choice[i]
        return lo, hi

    def _fits(self, j, opt, residual) -> bool:
        w = opt.width_mm
        return all(w * m <= residual[e] + WIDTH_TOL_MM for e, m in self.incidence[j])

    def _fitting(self, j, residual, window=None) -> List[int]:
        lo, hi = window if window is not None else (0, len(self.options[j]) - 1)
        return [k for k in range(lo, hi + 1) if self._fits(j, self.options[j][k], residual)]

    def _commit(self, choice, cost):
        if cost < self.best_cost:
            self.best_cost = cost
            self.best = list(choice)

    def _try_completion(self, choice, residual, free, picks, cost) -> bool:
        """Accept the cheapest-fitting completion if it is jointly feasible."""
        res = list(residual)
        for j, k in zip(free, picks):
            w = self.options[j][k].width_mm
            for e, m in self.incidence[j]:
                res[e] -= w * m
        if min(res, default=0.0) < -WIDTH_TOL_MM:
            return False
        full = list(choice)
        for j, k in zip(free, picks):
            full[j] = k
        self._commit(full, cost)
        return True

    def _lp_bound(self, free, fitting, residual):
        """Lagrangian bound from the LP relaxation's shoreline duals.

        With multipliers ``y <= 0`` on the edge rows, every feasible
        completion costs at least ``sum_j min_k (c_jk - y.a_jk) + y.b``. The
        bound is evaluated here from ``y`` alone, so it stays valid whatever
        the LP solver's tolerances. Returns ``(bound, x, excess)`` where
        ``excess[j, k]`` is how far option ``k`` of net ``j`` sits above that
        net's minimum, or ``(inf, None, None)`` when the LP is infeasible.
        """
        from scipy.optimize import linprog
        from scipy.sparse import coo_matrix

        self.lp_calls += 1
        costs, eq_r, eq_c, ub_r, ub_c, ub_v, owners = [], [], [], [], [], [], []
        col = 0
        for row, j in enumerate(free):
            for k in fitting[j]:
                opt = self.options[j][k]
                costs.append(opt.cost)
                eq_r.append(row)
                eq_c.append(col)
                for e, m in self.incidence[j]:
                    ub_r.append(e)
                    ub_c.append(col)
                    ub_v.append(opt.width_mm * m)
                owners.append((j, k))
                col += 1
        b = np.asarray(residual) + WIDTH_TOL_MM
        res = linprog(
            np.asarray(costs),
            A_ub=coo_matrix((ub_v, (ub_r, ub_c)), shape=(len(self.capacity), col)),
            b_ub=b,
            A_eq=coo_matrix((np.ones(col), (eq_r, eq_c)), shape=(len(free), col)),
            b_eq=np.ones(len(free)),
            bounds=(0.0, None),
            method="highs",
        )
        if res.status == 2:
            return math.inf, None, None
        if res.status != 0:
            return None, None, None
        y = np.minimum(res.ineqlin.marginals, 0.0)
        bound = float(np.dot(y, b))
        excess = {}
        for j in free:
            priced = []
            for k in fitting[j]:
                opt = self.options[j][k]
                priced.append((k, opt.cost - sum(y[e] * opt.width_mm * m for e, m in self.incidence[j])))
            low = min(v for _, v in priced)
            bound += low
            for k, v in priced:
                excess[(j, k)] = v - low
        return bound, dict(zip(owners, res.x)), excess

    def _improve(self, choice, residual):
        """Move nets to cheaper options while the freed and needed widths allow it.

        Nets with the largest possible saving go first. Mutates both arguments.
        """
        order = sorted(
            range(len(self.nets)),
            key=lambda j: (-(self.options[j][choice[j]].cost - self.options[j][0].cost), j),
        )
        for j in order:
            cur = self.options[j][choice[j]]
            for k in range(choice[j]):
                opt = self.options[j][k]
                delta = opt.width_mm - cur.width_mm
                if all(delta * m <= residual[e] + WIDTH_TOL_MM for e, m in self.incidence[j]):
                    for e, m in self.incidence[j]:
                        residual[e] -= delta * m
                    choice[j] = k
                    break
        return choice

    def _seed_incumbent(self):
        """Start from every net on its narrowest option, then upgrade.

        The all-narrowest assignment uses the least shoreline possible, so it
        is feasible whenever the component is.
        """
        choice = [len(opts) - 1 for opts in self.options]
        residual = list(self.capacity)
        for j, k in enumerate(choice):
            for e, m in self.incidence[j]:
                residual[e] -= self.options[j][k].width_mm * m
        if min(residual) < -WIDTH_TOL_MM:
            return
        self._improve(choice, residual)
        self._commit(choice, math.fsum(self.options[j][k].cost for j, k in enumerate(choice)))

    def _round_lp(self, choice, residual, free, fitting, x):
        """Incumbent from an LP point: narrowest option in each net's LP support, then upgrade."""
        full = list(choice)
        res = list(residual)
        for j in free:
            support = [k for k in fitting[j] if x[(j, k)] > 1e-9]
            k = max(support) if support else fitting[j][-1]
            full[j] = k
            for e, m in self.incidence[j]:
                res[e] -= self.options[j][k].width_mm * m
        if min(res) < -WIDTH_TOL_MM:
            return
        # any complete feasible assignment is a valid incumbent, branch decisions included or not
        self._improve(full, res)
        self._commit(full, math.fsum(self.options[j][k].cost for j, k in enumerate(full)))

    def run(self):
        self._seed_incumbent()
        n = len(self.nets)
        # node: (choice, residual, partial cost, options banned by reduced-cost fixing)
        stack = [([-1] * n, list(self.capacity), 0.0, frozenset())]
        while stack:
            self.nodes += 1
            if self.deadline is not None and (self.nodes & 63) == 0 and time.perf_counter() > self.deadline:
                self.timed_out = True
                return
            choice, residual, partial, banned = stack.pop()
            free = [j for j in range(n) if choice[j] < 0]
            if not free:
                self._commit(choice, partial)
                continue
            fitting = {}
            picks = []
            bound = partial
            dead = False
            for j in free:
                fit = [k for k in self._fitting(j, residual, self._window(j, choice)) if (j, k) not in banned]
                if not fit:
                    dead = True
                    break
                fitting[j] = fit
                picks.append(fit[0])
                bound += self.options[j][fit[0]].cost
            if dead or bound >= self.best_cost:
                continue
            if self._try_completion(choice, residual, free, picks, bound):
                continue
            branch = None
            if self.use_lp and len(free) >= LP_MIN_NETS:
                lower, x, excess = self._lp_bound(free, fitting, residual)
                if lower is not None:
                    if partial + lower >= self.best_cost:
                        continue
                    self._round_lp(choice, residual, free, fitting, x)
                    if partial + lower >= self.best_cost:
                        continue
                    # reduced-cost fixing: options that cannot beat the incumbent
                    gap = self.best_cost - partial - lower
                    newly = [(j, k) for (j, k), v in excess.items() if v >= gap]
                    if newly:
                        banned = banned.union(newly)
                        for j in free:
                            fitting[j] = [k for k in fitting[j] if (j, k) not in banned]
                            if not fitting[j]:
                                dead = True
                        if dead:
                            continue
                    worst = 0.0
                    for j in free:
                        frac = max(min(x[(j, k)], 1 - x[(j, k)]) for k in fitting[j])
                        if frac > worst + 1e-9:
                            worst, branch = frac, j
            if branch is None:
                # fail-first: fewest fitting options, then the first in order
                branch = min(free, key=lambda j: (len(fitting[j]), j))
            for k in reversed(fitting[branch]):
                opt = self.options[branch][k]
                child = list(choice)
                child[branch] = k
                res = list(residual)
                for e, m in self.incidence[branch]:
                    res[e] -= opt.width_mm * m
                stack.append((child, res, partial + opt.cost, banned))

    def run_milp(self):
        """Solve the component as a 0/1 program with HiGHS.

        Costs are rescaled to order one so the solver's absolute gap does not
        swamp objectives that are tiny in raw units. The returned point is
        rounded and re-checked against the shoreline budgets; if the solver's
        feasibility tolerance let a budget slip, the solve is repeated with
        budgets shrunk by that tolerance and the result is only ``feasible``.
        """
        from scipy.optimize import Bounds, LinearConstraint, milp
        from scipy.sparse import coo_matrix

        n = len(self.nets)
        costs, eq_r, eq_c, ub_r, ub_c, ub_v, owners = [], [], [], [], [], [], []
        for j in range(n):
            for k, opt in enumerate(self.options[j]):
                col = len(costs)
                costs.append(opt.cost)
                eq_r.append(j)
                eq_c.append(col)
                for e, m in self.incidence[j]:
                    ub_r.append(e)
                    ub_c.append(col)
                    ub_v.append(opt.width_mm * m)
                owners.append((j, k))
        c = np.asarray(costs)
        c = c / np.mean(c)
        a_eq = coo_matrix((np.ones(len(c)), (eq_r, eq_c)), shape=(n, len(c)))
        a_ub = coo_matrix((ub_v, (ub_r, ub_c)), shape=(len(self.capacity), len(c)))
        cap = np.asarray(self.capacity)
        self.exact = True
        for shrink in (-WIDTH_TOL_MM, 1e-6):
            opts = {"mip_rel_gap": 0.0}
            if self.deadline is not None:
                opts["time_limit"] = max(self.deadline - time.perf_counter(), 0.01)
            res = milp(
                c,
                integrality=np.ones(len(c)),
                bounds=Bounds(0, 1),
                constraints=[LinearConstraint(a_eq, 1, 1), LinearConstraint(a_ub, -np.inf, cap - shrink)],
                options=opts,
            )
            self.lp_calls += 1
            if res.x is None:
                self.timed_out = res.status == 1
                return
            self.timed_out = res.status != 0
            choice = [-1] * n
            weight = [-1.0] * n
            for (j, k), v in zip(owners, res.x):
                if v > weight[j]:
                    choice[j], weight[j] = k, v
            used = [0.0] * len(self.capacity)
            for j, k in enumerate(choice):
                for e, m in self.incidence[j]:
                    used[e] += self.options[j][k].width_mm * m
            if all(u <= cap_e + WIDTH_TOL_MM for u, cap_e in zip(used, self.capacity)):
                self._commit(choice, math.fsum(self.options[j][k].cost for j, k in enumerate(choice)))
                return
            self.exact = False

    def tightest_edge(self):
        """Edge with the largest ratio of minimum possible demand to capacity."""
        demand = [0.0] * len(self.capacity)
        for j in range(len(self.nets)):
            w = min(opt.width_mm for opt in self.options[j])
            for e, m in self.incidence[j]:
                demand[e] += w * m
        ratios = [d / c for d, c in zip(demand, self.capacity)]
        e = int(np.argmax(ratios))
        return e, demand[e]


def solve_exact(problem: AssignmentProblem, time_budget: Optional[float] = None, *, engine: str = "auto") -> AssignmentSolution:
    """Provably optimal assignment, or the best incumbent when time runs out.

    Widths are fixed at the minimum ``BW / shoreline`` since the objective does
    not depend on them. Edges whose worst-case demand fits their budget are
    dropped, and nets are split into independent components over the
    remaining (binding) edges.

    Parameters
    ----------
    problem : AssignmentProblem
    time_budget : float, optional
        Seconds. On expiry the best incumbent is returned as ``feasible``.
    engine : {"auto", "bnb", "milp"}
        ``bnb`` searches each component depth-first with options in
        (cost, name) order, pruning with the sum of per-net cheapest fitting
        options and, from ``LP_MIN_NETS`` nets up, a Lagrangian bound with
        reduced-cost fixing. Among equal-cost optima it returns the first one
        reached. ``milp`` hands each component to HiGHS. ``auto`` uses
        ``bnb`` below ``LP_MIN_NETS`` nets and ``milp`` above.
    """
    if engine not in ("auto", "bnb", "milp"):
        raise ValueError(f"unknown engine {engine!r}")
    start = time.perf_counter()
    deadline = None if time_budget is None else start + float(time_budget)
    stats = {"nodes": 0, "lp_calls": 0, "components": 0}
    witness = _reach_witness(problem)
    if witness is not None:
        stats["seconds"] = time.perf_counter() - start
        return _no_solution(Status.INFEASIBLE, "exact", witness, stats)

    options = [_pareto(opts) for opts in problem.options]
    edges = sorted(problem.capacities)
    eidx = {e: i for i, e in enumerate(edges)}
    worst = [0.0] * len(edges)
    for net, opts in zip(problem.nets, options):
        wmax = max(o.width_mm for o in opts)
        for end in net.endpoints:
            worst[eidx[end]] += wmax
    binding = {i for i, e in enumerate(edges) if worst[i] > problem.capacities[e] + WIDTH_TOL_MM}

    # union-find over nets sharing a binding edge
    parent = list(range(problem.n_nets))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    owner: Dict[int, int] = {}
    for i, net in enumerate(problem.nets):
        for end in net.endpoints:
            e = eidx[end]
            if e in binding:
                if e in owner:
                    parent[find(i)] = find(owner[e])
                else:
                    owner[e] = i
    groups: Dict[int, List[int]] = {}
    for i in range(problem.n_nets):
        groups.setdefault(find(i), []).append(i)

    picks: List[LinkOption] = [opts[0] for opts in options]
    status = Status.OPTIMAL
    coupled = [m for m in groups.values() if any(eidx[end] in binding for i in m for end in problem.nets[i].endpoints)]
    # small components first; each gets an equal share of whatever time is left
    coupled.sort(key=lambda m: (len(m), m[0]))
    for index, members in enumerate(coupled):
        local_edges = sorted({eidx[end] for i in members for end in problem.nets[i].endpoints if eidx[end] in binding})
        stats["components"] += 1
        share = None
        if deadline is not None:
            now = time.perf_counter()
            share = now + max(deadline - now, 0.0) / (len(coupled) - index)
        lmap = {e: k for k, e in enumerate(local_edges)}
        incidence = []
        for i in members:
            counts: Dict[int, int] = {}
            for end in problem.nets[i].endpoints:
                e = eidx[end]
                if e in lmap:
                    counts[lmap[e]] = counts.get(lmap[e], 0) + 1
            incidence.append(tuple(sorted(counts.items())))
        comp = _Component(
            members,
            [options[i] for i in members],
            incidence,
            [problem.capacities[edges[e]] for e in local_edges],
            share,
            use_lp=True,
        )
        if engine == "milp" or (engine == "auto" and len(members) >= LP_MIN_NETS):
            comp.run_milp()
        else:
            comp.run()
        stats["nodes"] += comp.nodes
        stats["lp_calls"] += comp.lp_calls
        if comp.best is None:
            stats["seconds"] = time.perf_counter() - start
            if comp.timed_out:
                return _no_solution(Status.UNKNOWN, "exact", None, stats)
            e, demand = comp.tightest_edge()
            chip, edge = edges[local_edges[e]]
            witness = {
                "constraint": "shoreline",
                "chiplet": chip,
                "edge": edge,
                "min_demand_mm": demand,
                "capacity_mm": problem.capacities[(chip, edge)],
            }
            return _no_solution(Status.INFEASIBLE, "exact", witness, stats)
        if comp.timed_out or not comp.exact:
            status = Status.FEASIBLE
        for j, k in enumerate(comp.best):
            picks[members[j]] = comp.options[j][k]
    stats["seconds"] = time.perf_counter() - start
    return _make_solution(problem, picks, status, "exact", stats)


def solve_greedy_simple(problem: AssignmentProblem) -> AssignmentSolution:
    """Per-net baseline: highest shoreline density that still fits, in input order."""
    start = time.perf_counter()
    residual = dict(problem.capacities)
    picks = []
    for net, opts in zip(problem.nets, problem.options):
        ranked = sorted(opts, key=lambda o: (-o.link.shoreline_gbps_per_mm, o.cost, o.name))
        chosen = None
        for opt in ranked:
            need: Dict[EdgeKey, float] = {}
            for end in net.endpoints:
                need[end] = need.get(end, 0.0) + opt.width_mm
            if all(w <= residual[end] + WIDTH_TOL_MM for end, w in need.items()):
                chosen = opt
                for end, w in need.items():
                    residual[end] -= w
                break
        if chosen is None:
            stats = {"seconds": time.perf_counter() - start}
            if not opts:
                witness = {"constraint": "reach", "net": net.id, "distance_mm": net.distance_mm, "filter": problem.link_filter.value}
            else:
                end = max(net.endpoints, key=lambda e: opts[-1].width_mm - residual[e])
                witness = {
                    "constraint": "shoreline",
                    "net": net.id,
                    "chiplet": end[0],
                    "edge": end[1],
                    "residual_mm": residual[end],
                    "capacity_mm": problem.capacities[end],
                }
            return _no_solution(Status.INFEASIBLE, "greedy", witness, stats)
        picks.append(chosen)
    return _make_solution(problem, picks, Status.FEASIBLE, "greedy", {"seconds": time.perf_counter() - start})


# --------------------------------------------------------------------------
# file formats


def _read_rows(source, required: Iterable[str]):
    if hasattr(source, "read"):
        name, text = getattr(source, "name", "<stream>"), source.read()
    else:
        name = os.fspath(source)
        with open(source, newline="") as fh:
            text = fh.read()
    body = [line for line in io.StringIO(text) if line.strip() and not line.lstrip().startswith("#")]
    if not body:
        return name, [], []
    reader = csv.DictReader(body)
    fields = [f.strip() for f in reader.fieldnames or []]
    reader.fieldnames = fields
    missing = [c for c in required if c not in fields]
    if missing:
        raise InputFormatError(f"missing columns {missing}", source=name)
    return name, fields, list(reader)


def _num(row, col, source, index) -> float:
    try:
        return float(row[col])
    except (TypeError, ValueError):
        raise InputFormatError(f"not a number: {row.get(col)!r}", source=source, row=index, field=col) from None


def load_floorplan(source) -> List[Chiplet]:
    """Chiplet edge budgets.

    Two layouts are accepted: ``chiplet,edge,width_mm`` lists each edge, and
    ``chiplet,die_width_mm,die_height_mm`` derives N/E/S/W budgets from the
    half perimeter.
    """
    name, fields, rows = _read_rows(source, ["chiplet"])
    if not rows:
        return []
    out: Dict[str, list] = {}
    if "edge" in fields:
        for index, row in enumerate(rows, start=1):
            chip = (row["chiplet"] or "").strip()
            width = _num(row, "width_mm", name, index)
            out.setdefault(chip, []).append(((row["edge"] or "").strip(), width))
        return [Chiplet(c, tuple(e)) for c, e in out.items()]
    if "die_width_mm" in fields and "die_height_mm" in fields:
        chips = []
        for index, row in enumerate(rows, start=1):
            w = _num(row, "die_width_mm", name, index)
            h = _num(row, "die_height_mm", name, index)
            chips.append(Chiplet.from_die((row["chiplet"] or "").strip(), w, h))
        return chips
    raise InputFormatError("floorplan needs either edge,width_mm or die_width_mm,die_height_mm columns", source=name)


_NET_COLUMNS = ("net", "src_chiplet", "src_edge", "dst_chiplet", "dst_edge", "distance_mm", "bw_gbps")


def load_netlist(source) -> List[Net]:
    name, _, rows = _read_rows(source, _NET_COLUMNS)
    nets = []
    for index, row in enumerate(rows, start=1):
        ends = (
            ((row["src_chiplet"] or "").strip(), (row["src_edge"] or "").strip()),
            ((row["dst_chiplet"] or "").strip(), (row["dst_edge"] or "").strip()),
        )
        nets.append(Net((row["net"] or "").strip(), ends, _num(row, "distance_mm", name, index), _num(row, "bw_gbps", name, index)))
    return nets


def dump_netlist(nets: Sequence[Net]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_NET_COLUMNS)
    for n in nets:
        (sc, se), (dc, de) = n.endpoints
        writer.writerow([n.id, sc, se, dc, de, repr(n.distance_mm), repr(n.bw_req_gbps)])
    return buf.getvalue()


def dump_floorplan(chiplets: Sequence[Chiplet]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["chiplet", "edge", "width_mm"])
    for chip in chiplets:
        for edge, width in chip.edges:
            writer.writerow([chip.id, edge, repr(width)])
    return buf.getvalue()


def solution_csv(solution: AssignmentSolution) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["net", "link", "width_mm", "src", "dst", "power_w", "area_mm2"])
    for a in solution.assignments:
        writer.writerow([a.net_id, a.link, repr(a.width_mm), ":".join(a.endpoints[0]), ":".join(a.endpoints[1]), repr(a.power_w), repr(a.area_mm2)])
    return buf.getvalue()


def format_solution(solution: AssignmentSolution, title: str = "") -> str:
    lines = []
    if title:
        lines.append(title)
    lines.append(f"status     {solution.status.value} ({solution.method})")
    if not solution.status.has_solution:
        if solution.witness:
            lines.append("witness    " + ", ".join(f"{k}={v}" for k, v in solution.witness.items()))
        return "\n".join(lines) + "\n"
    lines.append(f"objective  {solution.objective_value:.6g}")
    lines.append(f"power      {solution.total_power_w:.2f} W")
    lines.append(f"area       {solution.total_area_mm2:.2f} mm^2")
    counts = solution.selection_counts()
    width = max(len(k) for k in counts)
    for link in sorted(counts):
        lines.append(f"  {link:<{width}}  {counts[link]} nets")
    return "\n".join(lines) + "\n"
