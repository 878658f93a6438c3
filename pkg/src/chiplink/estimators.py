"""scikit-learn style wrappers around the functional core.

The core modules stay plain functions over dataclasses. These classes only add
the familiar ``fit`` / ``transform`` / ``predict`` surface and parameter
handling (``get_params``, ``set_params``, ``clone``) for pipelines and grid
searches over reliability targets or cost weights.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .assignment import Chiplet, Net, build_problem, solve_exact, solve_greedy_simple
from .config import DEFAULT_COST_TABLE, ScenarioConfig, _data_or_path
from .ecc_cost import DEFAULT_RTT_NS, DEFAULT_SYNDROME_FRACTION, NodeScaling, ecc_stack_cost, load_cost_table
from .exceptions import DegenerateOperatingPointError, InfeasibleCodeError
from .links import DEFAULT_REFERENCE_BW_GBPS, LinkRecord, MetricsKind, correct_link
from .reliability import FrameConfig, ReliabilityTargets, analyze, rs_family, select_code


def _p_column(X) -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"expected a single column of p_pre values, got shape {arr.shape}")
        arr = arr[:, 0]
    elif arr.ndim != 1:
        raise ValueError(f"expected 1-D or single-column input, got shape {arr.shape}")
    if np.any(~np.isfinite(arr)) or np.any((arr < 0) | (arr > 1)):
        raise ValueError("p_pre values must be finite and lie in [0, 1]")
    return arr


class CodeSelector(BaseEstimator):
    """Pick the highest-rate RS code per raw BER.

    ``fit`` freezes the frame, targets and code family. ``predict`` maps a
    column of pre-FEC BERs to code dimensions K (``-1`` where no code meets
    the target). ``transform`` adds goodput, delivered BER and frame-fail
    probability as extra columns (NaN where infeasible).
    """

    def __init__(
        self,
        mode: str = "hybrid",
        payload_bytes: int = 256,
        header_bytes: int = 8,
        ber_target: float = 1e-27,
        p_undet: float = 2.0**-64,
        f_wrong: float = 0.5,
        max_retries: Optional[int] = 1,
        n_symbols: int = 86,
        k_min: int = 44,
        k_step: int = 2,
    ):
        self.mode = mode
        self.payload_bytes = payload_bytes
        self.header_bytes = header_bytes
        self.ber_target = ber_target
        self.p_undet = p_undet
        self.f_wrong = f_wrong
        self.max_retries = max_retries
        self.n_symbols = n_symbols
        self.k_min = k_min
        self.k_step = k_step

    def fit(self, X=None, y=None):
        self.frame_ = FrameConfig(self.payload_bytes, self.header_bytes, self.mode)
        self.targets_ = ReliabilityTargets(self.ber_target, self.p_undet, self.f_wrong, self.max_retries)
        self.family_ = rs_family(self.n_symbols, self.k_min, self.k_step)
        return self

    def _select(self, p):
        try:
            return select_code(float(p), self.frame_, self.targets_, self.family_)
        except InfeasibleCodeError:
            return None

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "frame_")
        out = []
        for p in _p_column(X):
            code = self._select(p)
            out.append(-1 if code is None else code.k_symbols)
        return np.asarray(out, dtype=int)

    def transform(self, X) -> np.ndarray:
        """Columns: K, goodput, delivered BER, per-attempt frame-fail probability."""
        check_is_fitted(self, "frame_")
        rows = []
        for p in _p_column(X):
            code = self._select(p)
            if code is None:
                rows.append((-1, np.nan, np.nan, np.nan))
                continue
            rep = analyze(float(p), code, self.frame_, self.targets_)
            rows.append((code.k_symbols, rep.goodput, rep.ber_delivered, rep.p_frame_fail))
        return np.asarray(rows, dtype=float).reshape(-1, 4)

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)


class LinkCorrector(TransformerMixin, BaseEstimator):
    """Turn raw transceiver records into delivered (ECC-corrected) records.

    Input and output are sequences of ``LinkRecord``. Records already marked
    corrected pass through untouched. A raw link with no feasible code is
    dropped and its name stored in ``infeasible_``.
    """

    def __init__(
        self,
        cost_table=None,
        mode: str = "hybrid",
        payload_bytes: int = 256,
        header_bytes: int = 8,
        ber_target: float = 1e-27,
        max_retries: Optional[int] = 1,
        energy_factor: float = 1.0,
        area_factor: float = 1.0,
        syndrome_fraction: float = DEFAULT_SYNDROME_FRACTION,
        rtt_ns: float = DEFAULT_RTT_NS,
        reference_bw_gbps: float = DEFAULT_REFERENCE_BW_GBPS,
    ):
        self.cost_table = cost_table
        self.mode = mode
        self.payload_bytes = payload_bytes
        self.header_bytes = header_bytes
        self.ber_target = ber_target
        self.max_retries = max_retries
        self.energy_factor = energy_factor
        self.area_factor = area_factor
        self.syndrome_fraction = syndrome_fraction
        self.rtt_ns = rtt_ns
        self.reference_bw_gbps = reference_bw_gbps

    def fit(self, X=None, y=None):
        source = self.cost_table
        if source is None or isinstance(source, str):
            source = _data_or_path(ScenarioConfig(), source or DEFAULT_COST_TABLE)
        self.costs_ = source if hasattr(source, "rs") else load_cost_table(source)
        self.frame_ = FrameConfig(self.payload_bytes, self.header_bytes, self.mode)
        self.targets_ = ReliabilityTargets(self.ber_target, max_retries=self.max_retries)
        self.scaling_ = NodeScaling(self.energy_factor, self.area_factor)
        return self

    def transform(self, X: Sequence[LinkRecord]) -> list:
        check_is_fitted(self, "costs_")
        out = []
        self.infeasible_ = []
        self.metrics_ = {}
        for link in X:
            if link.metrics_kind is MetricsKind.CORRECTED:
                out.append(link)
                continue
            try:
                metrics = correct_link(
                    link,
                    self.frame_,
                    self.targets_,
                    self.costs_,
                    self.scaling_,
                    reference_bw_gbps=self.reference_bw_gbps,
                    syndrome_fraction=self.syndrome_fraction,
                    rtt_ns=self.rtt_ns,
                )
            except (InfeasibleCodeError, DegenerateOperatingPointError):
                self.infeasible_.append(link.name)
                continue
            self.metrics_[link.name] = metrics
            out.append(metrics.to_record(link))
        return out

    def stack_cost(self, p_pre: float, k_symbols: int):
        """ECC stack summary for one code at one raw BER, under the fitted settings."""
        check_is_fitted(self, "costs_")
        code = next(c for c in rs_family() if c.k_symbols == k_symbols)
        return ecc_stack_cost(code, self.frame_, p_pre, self.costs_, self.scaling_, self.syndrome_fraction, self.rtt_ns)


class LinkAssigner(BaseEstimator):
    """Assign a link technology to every net of a floorplan.

    ``fit(nets, chiplets=..., links=...)`` builds the problem and solves it;
    ``predict(nets)`` returns the chosen link name per requested net id.
    """

    def __init__(
        self,
        lambda_p: float = 1.0,
        lambda_a: float = 1.0,
        link_filter: str = "all",
        method: str = "exact",
        time_budget: Optional[float] = None,
        engine: str = "auto",
    ):
        self.lambda_p = lambda_p
        self.lambda_a = lambda_a
        self.link_filter = link_filter
        self.method = method
        self.time_budget = time_budget
        self.engine = engine

    def fit(self, X: Sequence[Net], y=None, *, chiplets: Sequence[Chiplet], links: Sequence[LinkRecord]):
        if self.method not in ("exact", "greedy"):
            raise ValueError(f"method must be 'exact' or 'greedy', got {self.method!r}")
        self.problem_ = build_problem(chiplets, list(X), links, self.lambda_p, self.lambda_a, self.link_filter)
        if self.method == "exact":
            self.solution_ = solve_exact(self.problem_, self.time_budget, engine=self.engine)
        else:
            self.solution_ = solve_greedy_simple(self.problem_)
        self.status_ = self.solution_.status
        return self

    def predict(self, X: Sequence[Net]) -> np.ndarray:
        """Chosen link per net; ``None`` entries when the solve found no assignment."""
        check_is_fitted(self, "solution_")
        chosen = {a.net_id: a.link for a in self.solution_.assignments}
        ids = [n.id if isinstance(n, Net) else str(n) for n in X]
        unknown = [i for i in ids if i not in {net.id for net in self.problem_.nets}]
        if unknown:
            raise KeyError(f"nets not in the fitted problem: {unknown}")
        return np.asarray([chosen.get(i) for i in ids], dtype=object)

    def score(self, X=None, y=None) -> float:
        """Negative objective, so that larger is better."""
        check_is_fitted(self, "solution_")
        return -float(self.solution_.objective_value)
