"""Reliability and goodput model for the RS-FEC / CRC / ARQ protection stack.

Bit errors are i.i.d. with probability ``p_pre``. A byte symbol is wrong if any
of its bits is wrong, symbol errors per codeword are binomial, and a codeword
fails when it carries more than ``t`` symbol errors. Frames are coded with a
streaming RS code, so one frame spans ``D / K`` codewords (possibly
fractional).

Every probability that can get close to 0 or 1 is evaluated through
``log1p``/``expm1`` or a log-domain sum; tail probabilities are summed term by
term, never obtained as ``1 - cdf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

from ._validation import check_count, check_positive, check_probability
from .exceptions import (
    DegenerateOperatingPointError,
    DomainError,
    InfeasibleCodeError,
)

__all__ = [
    "CRC64_BYTES",
    "ProtectionMode",
    "RsCode",
    "FrameConfig",
    "ReliabilityTargets",
    "ReliabilityReport",
    "rs_family",
    "binomial_range_prob",
    "symbol_error_prob",
    "block_fail_prob",
    "correctable_activity_prob",
    "post_fec_ber",
    "frame_fail_prob",
    "hybrid_failure_analysis",
    "fec_only_analysis",
    "analyze",
    "frame_fail_budget",
    "select_code",
]

CRC64_BYTES = 8


class ProtectionMode(str, Enum):
    FEC_ONLY = "fec_only"
    HYBRID = "hybrid"

    @classmethod
    def parse(cls, value) -> "ProtectionMode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_").replace("+", "_")
        aliases = {
            "fec_only": cls.FEC_ONLY,
            "fec": cls.FEC_ONLY,
            "feconly": cls.FEC_ONLY,
            "hybrid": cls.HYBRID,
            "fec_crc": cls.HYBRID,
            "fec_crc_arq": cls.HYBRID,
        }
        try:
            return aliases[key]
        except KeyError:
            raise DomainError(f"unknown protection mode {value!r}") from None


@dataclass(frozen=True)
class RsCode:
    """RS(N, K) over GF(2^M); ``t`` is always derived, never stored."""

    n_symbols: int = 86
    k_symbols: int = 86
    symbol_bits: int = 8

    def __post_init__(self):
        m = check_count(self.symbol_bits, "symbol_bits", minimum=1)
        n = check_count(self.n_symbols, "n_symbols", minimum=1)
        k = check_count(self.k_symbols, "k_symbols", minimum=1)
        if k > n:
            raise DomainError(f"K={k} exceeds N={n}")
        if n > 2**m - 1:
            raise DomainError(f"N={n} exceeds 2^{m} - 1 for GF(2^{m})")

    @property
    def t_correctable(self) -> int:
        return (self.n_symbols - self.k_symbols) // 2

    @property
    def rate(self) -> float:
        return self.k_symbols / self.n_symbols

    @property
    def is_uncoded(self) -> bool:
        """K = N: the no-FEC operating point."""
        return self.k_symbols == self.n_symbols

    def __str__(self) -> str:
        return f"RS({self.n_symbols},{self.k_symbols})"


@dataclass(frozen=True)
class FrameConfig:
    """ARQ frame layout. CRC bytes follow the mode (0 or 8), they are not free."""

    payload_bytes: int = 256
    header_bytes: int = 8
    mode: ProtectionMode = ProtectionMode.HYBRID

    def __post_init__(self):
        check_count(self.payload_bytes, "payload_bytes", minimum=1)
        check_count(self.header_bytes, "header_bytes", minimum=0)
        object.__setattr__(self, "mode", ProtectionMode.parse(self.mode))

    @property
    def crc_bytes(self) -> int:
        return CRC64_BYTES if self.mode is ProtectionMode.HYBRID else 0

    @property
    def data_bytes(self) -> int:
        """RS-protected bytes per frame, ``D = P + H + C``."""
        return self.payload_bytes + self.header_bytes + self.crc_bytes

    def with_mode(self, mode) -> "FrameConfig":
        return FrameConfig(self.payload_bytes, self.header_bytes, ProtectionMode.parse(mode))


@dataclass(frozen=True)
class ReliabilityTargets:
    """Delivered-BER target plus the CRC/ARQ failure model.

    ``max_retries=None`` means unbounded retry (no drops).
    """

    ber_target: float = 1e-27
    p_undet: float = 2.0**-64
    f_wrong: float = 0.5
    max_retries: Optional[int] = 1

    def __post_init__(self):
        check_probability(self.ber_target, "ber_target", open_low=True, open_high=True)
        check_probability(self.p_undet, "p_undet")
        check_probability(self.f_wrong, "f_wrong", open_low=True)
        if self.max_retries is not None:
            check_count(self.max_retries, "max_retries", minimum=0)

    @property
    def attempts(self) -> Optional[int]:
        return None if self.max_retries is None else self.max_retries + 1

    @property
    def unbounded(self) -> bool:
        return self.max_retries is None


@dataclass(frozen=True)
class ReliabilityReport:
    code: RsCode
    mode: ProtectionMode
    p_sym: float
    p_blk_fail: float
    p_frame_fail: float
    p_det: float
    ber_delivered: float
    p_drop: float
    ber_drop_eff: float
    expected_attempts: float
    goodput: float
    wire_bytes_per_attempt: float

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["code"] = str(self.code)
        out["k_symbols"] = self.code.k_symbols
        out["mode"] = self.mode.value
        return out


def rs_family(n_symbols: int = 86, k_min: int = 44, k_step: int = 2, symbol_bits: int = 8) -> list[RsCode]:
    """Codes RS(N, K) for K = N, N - step, ..., down to ``k_min``, highest rate first."""
    check_count(k_step, "k_step", minimum=1)
    check_count(k_min, "k_min", minimum=1)
    return [RsCode(n_symbols, k, symbol_bits) for k in range(n_symbols, k_min - 1, -k_step)]


# --- binomial tails in the log domain -------------------------------------------------


def _log_comb(n: int, k: int) -> float:
    # exact integer coefficient, one rounding; lgamma differences lose ~1e-13 at n ~ 255
    if n <= 1024:
        return math.log(math.comb(n, k))
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _logsumexp(values: Sequence[float]) -> float:
    top = max(values)
    if top == -math.inf:
        return -math.inf
    return top + math.log(math.fsum(math.exp(v - top) for v in values))


def _log_binom_terms(n: int, p: float, lo: int, hi: int, weight=None) -> list[float]:
    log_p = math.log(p)
    log_q = math.log1p(-p)
    terms = []
    for i in range(lo, hi + 1):
        term = _log_comb(n, i) + i * log_p + (n - i) * log_q
        if weight is not None:
            term += weight(i)
        terms.append(term)
    return terms


def binomial_range_prob(n: int, p: float, lo: int, hi: int) -> float:
    """``Pr[lo <= X <= hi]`` for ``X ~ Binomial(n, p)`` by log-domain summation."""
    n = check_count(n, "n", minimum=0)
    p = check_probability(p, "p")
    lo = max(int(lo), 0)
    hi = min(int(hi), n)
    if lo > hi:
        return 0.0
    if p == 0.0:
        return 1.0 if lo == 0 else 0.0
    if p == 1.0:
        return 1.0 if hi == n else 0.0
    return min(1.0, math.exp(_logsumexp(_log_binom_terms(n, p, lo, hi))))


# --- the protection-stack model -------------------------------------------------------


def symbol_error_prob(p_pre: float, symbol_bits: int = 8) -> float:
    """Probability that an M-bit symbol holds at least one bit error."""
    p_pre = check_probability(p_pre, "p_pre")
    symbol_bits = check_count(symbol_bits, "symbol_bits", minimum=1)
    if p_pre == 1.0:
        return 1.0
    return -math.expm1(symbol_bits * math.log1p(-p_pre))


def block_fail_prob(p_sym: float, code: RsCode) -> float:
    """Codeword decode-failure probability ``Pr[X > t]``."""
    return binomial_range_prob(code.n_symbols, p_sym, code.t_correctable + 1, code.n_symbols)


def correctable_activity_prob(p_sym: float, code: RsCode) -> float:
    """``Pr[1 <= X <= t]``: the codeword needs actual correction work."""
    if code.t_correctable == 0:
        check_probability(p_sym, "p_sym")
        return 0.0
    return binomial_range_prob(code.n_symbols, p_sym, 1, code.t_correctable)


def post_fec_ber(p_pre: float, code: RsCode) -> float:
    """Expected fraction of wrong bits left in uncorrectable codewords.

    Each wrong symbol is assumed to have half of its bits corrupted, so a
    codeword with ``i > t`` symbol errors contributes ``i / (2N)``.
    """
    p_sym = symbol_error_prob(p_pre, code.symbol_bits)
    n, t = code.n_symbols, code.t_correctable
    if p_sym == 0.0:
        return 0.0
    if p_sym == 1.0:
        return 0.5
    log_weight = -math.log(2 * n)
    terms = _log_binom_terms(n, p_sym, t + 1, n, weight=lambda i: math.log(i) + log_weight)
    return math.exp(_logsumexp(terms))


def frame_fail_prob(p_pre: float, code: RsCode, frame: FrameConfig) -> float:
    """Per-attempt probability that a frame still holds corruption after decoding."""
    p_blk = block_fail_prob(symbol_error_prob(p_pre, code.symbol_bits), code)
    b_eff = frame.data_bytes / code.k_symbols
    if p_blk == 0.0:
        return 0.0
    if p_blk == 1.0:
        return 1.0
    return -math.expm1(b_eff * math.log1p(-p_blk))


def _wire_bytes(code: RsCode, frame: FrameConfig) -> float:
    return frame.data_bytes * code.n_symbols / code.k_symbols


def hybrid_failure_analysis(
    p_pre: float,
    code: RsCode,
    frame: FrameConfig,
    targets: ReliabilityTargets = ReliabilityTargets(),
) -> ReliabilityReport:
    """Full FEC + CRC + ARQ report at one operating point."""
    if frame.mode is not ProtectionMode.HYBRID:
        raise DomainError("hybrid_failure_analysis needs a hybrid frame (CRC present)")
    p_sym = symbol_error_prob(p_pre, code.symbol_bits)
    p_blk = block_fail_prob(p_sym, code)
    p_frame = frame_fail_prob(p_pre, code, frame)
    p_det = p_frame * (1.0 - targets.p_undet)
    if p_det >= 1.0:
        raise DegenerateOperatingPointError(
            f"{code} at p_pre={p_pre:g}: every attempt fails CRC, goodput undefined"
        )
    # 1 / (1 - p_det) without forming 1 - p_det for tiny p_det
    attempts = math.exp(-math.log1p(-p_det))
    ber_delivered = targets.f_wrong * p_frame * targets.p_undet * attempts
    if targets.unbounded or p_det == 0.0:
        p_drop = 0.0
    else:
        p_drop = p_det ** targets.attempts
    ber_drop_eff = p_drop / (8 * frame.payload_bytes)
    wire = _wire_bytes(code, frame)
    goodput = (frame.payload_bytes / frame.data_bytes) * code.rate * (1.0 - p_det)
    return ReliabilityReport(
        code=code,
        mode=frame.mode,
        p_sym=p_sym,
        p_blk_fail=p_blk,
        p_frame_fail=p_frame,
        p_det=p_det,
        ber_delivered=ber_delivered,
        p_drop=p_drop,
        ber_drop_eff=ber_drop_eff,
        expected_attempts=attempts,
        goodput=goodput,
        wire_bytes_per_attempt=wire,
    )


def fec_only_analysis(p_pre: float, code: RsCode, frame: FrameConfig) -> ReliabilityReport:
    """FEC-only report: no CRC, no retry, delivered BER is the post-FEC BER.

    For the uncoded point (K = N) there is no decoder, so the delivered BER is
    the raw channel BER.
    """
    if frame.mode is not ProtectionMode.FEC_ONLY:
        raise DomainError("fec_only_analysis needs a FEC-only frame (no CRC)")
    p_pre = check_probability(p_pre, "p_pre")
    p_sym = symbol_error_prob(p_pre, code.symbol_bits)
    ber = p_pre if code.is_uncoded else post_fec_ber(p_pre, code)
    return ReliabilityReport(
        code=code,
        mode=frame.mode,
        p_sym=p_sym,
        p_blk_fail=block_fail_prob(p_sym, code),
        p_frame_fail=frame_fail_prob(p_pre, code, frame),
        p_det=0.0,
        ber_delivered=ber,
        p_drop=0.0,
        ber_drop_eff=0.0,
        expected_attempts=1.0,
        goodput=(frame.payload_bytes / frame.data_bytes) * code.rate,
        wire_bytes_per_attempt=_wire_bytes(code, frame),
    )


def analyze(
    p_pre: float,
    code: RsCode,
    frame: FrameConfig,
    targets: ReliabilityTargets = ReliabilityTargets(),
) -> ReliabilityReport:
    """Dispatch on ``frame.mode``."""
    if frame.mode is ProtectionMode.HYBRID:
        return hybrid_failure_analysis(p_pre, code, frame, targets)
    return fec_only_analysis(p_pre, code, frame)


def frame_fail_budget(frame: FrameConfig, targets: ReliabilityTargets = ReliabilityTargets()) -> float:
    """Largest per-attempt frame-fail probability meeting both SDC and drop budgets.

    The SDC condition ``f * pf * pu / (1 - pf (1 - pu)) <= T`` inverts exactly to
    ``pf <= T / (f pu + T (1 - pu))``; the drop condition
    ``(pf (1 - pu))^A / (8P) <= T`` to ``pf <= (8 P T)^(1/A) / (1 - pu)``.
    """
    if frame.mode is not ProtectionMode.HYBRID:
        raise DomainError("frame_fail_budget only applies to hybrid frames")
    target = targets.ber_target
    pu = targets.p_undet
    sdc = target / (targets.f_wrong * pu + target * (1.0 - pu))
    budget = min(1.0, sdc)
    if not targets.unbounded and pu < 1.0:
        drop = (8 * frame.payload_bytes * target) ** (1.0 / targets.attempts) / (1.0 - pu)
        budget = min(budget, drop)
    if not budget > 0.0:
        raise InfeasibleCodeError("no positive frame-fail probability meets the targets")
    return budget


def _meets_target(report: ReliabilityReport, targets: ReliabilityTargets) -> bool:
    if report.ber_delivered > targets.ber_target:
        return False
    return report.ber_drop_eff <= targets.ber_target


def select_code(
    p_pre: float,
    frame: FrameConfig,
    targets: ReliabilityTargets = ReliabilityTargets(),
    code_family: Optional[Iterable[RsCode]] = None,
) -> RsCode:
    """Highest-rate code of the family meeting the delivered-BER target.

    FEC-only: post-FEC BER at or below the target (the uncoded point qualifies
    when the raw BER already does). Hybrid: frame-fail probability within the
    budget, then the exact delivered-BER and drop conditions are re-checked on
    the chosen code and the next stronger code is tried if either fails.
    """
    p_pre = check_probability(p_pre, "p_pre")
    family = sorted(code_family if code_family is not None else rs_family(), key=lambda c: -c.k_symbols)
    if not family:
        raise DomainError("code_family is empty")
    if frame.mode is ProtectionMode.HYBRID:
        budget = frame_fail_budget(frame, targets)
        for code in family:
            if frame_fail_prob(p_pre, code, frame) > budget:
                continue
            try:
                report = hybrid_failure_analysis(p_pre, code, frame, targets)
            except DegenerateOperatingPointError:
                continue
            if _meets_target(report, targets):
                return code
    else:
        for code in family:
            ber = p_pre if code.is_uncoded else post_fec_ber(p_pre, code)
            if ber <= targets.ber_target:
                return code
    raise InfeasibleCodeError(
        f"no code down to {family[-1]} meets target {targets.ber_target:g} "
        f"at p_pre={p_pre:g} ({frame.mode.value})",
        p_pre=p_pre,
        strongest=family[-1],
    )
