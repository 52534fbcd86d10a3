"""Study statistics: questionnaire scoring, paired tests, and timing summaries.

Student-t tail probabilities and critical values are computed from the
regularized incomplete beta function (continued fraction evaluation), so the
toolkit has no statistical library dependency and fixtures stay bit-stable.

A note on reported effect sizes: for paired data the standardized mean
difference satisfies dz = t / sqrt(n) exactly. Published summaries sometimes
round t and dz independently, so re-deriving one from the other can disagree
in the last digit (e.g. t = 3.1 with n = 10 gives dz = 0.980, which prints as
1.0 at one decimal, not 0.9). This toolkit asserts the identity and leaves the
rounding to the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_BETA_REL_TOL = 1e-12
_BETA_MAX_ITER = 500


class EvalError(ValueError):
    pass


class DegenerateSampleError(EvalError):
    """All paired differences identical: the t statistic is undefined."""


# --- Student-t machinery -----------------------------------------------------

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_REL_TOL:
            return h
    raise EvalError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if a <= 0 or b <= 0:
        raise EvalError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_bt = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
             + a * math.log(x) + b * math.log1p(-x))
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def t_two_tailed_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student-t with df degrees of freedom."""
    if df <= 0:
        raise EvalError("degrees of freedom must be positive")
    x = df / (df + t * t)
    return regularized_incomplete_beta(df / 2.0, 0.5, x)


def t_cdf(t: float, df: float) -> float:
    p = t_two_tailed_p(t, df)
    return 1.0 - p / 2.0 if t >= 0 else p / 2.0


def t_critical(df: float, level: float) -> float:
    """Two-sided critical value: P(|T| <= t_crit) = level."""
    if not 0.0 < level < 1.0:
        raise EvalError(f"confidence level must be in (0, 1), got {level}")
    target = 1.0 - (1.0 - level) / 2.0
    lo, hi = 0.0, 1.0
    while t_cdf(hi, df) < target:
        hi *= 2.0
        if hi > 1e12:
            raise EvalError("critical value search diverged")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- questionnaire scoring ---------------------------------------------------

TLX_SUBSCALES = ("mental", "physical", "temporal", "performance", "effort",
                 "frustration")


@dataclass(frozen=True)
class TlxResponse:
    mental: float
    physical: float
    temporal: float
    performance: float
    effort: float
    frustration: float

    def __post_init__(self):
        for name in TLX_SUBSCALES:
            value = getattr(self, name)
            if not (0.0 <= value <= 100.0):
                raise EvalError(f"{name} rating {value} outside [0, 100]")

    def ratings(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in TLX_SUBSCALES)


@dataclass(frozen=True)
class UmuxResponse:
    pu: float
    peu: float

    def __post_init__(self):
        for name in ("pu", "peu"):
            value = getattr(self, name)
            if not (1.0 <= value <= 7.0):
                raise EvalError(f"{name} item {value} outside [1, 7]")


@dataclass(frozen=True)
class PairedSample:
    a: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self):
        if len(self.a) != len(self.b):
            raise EvalError(f"unpaired sample: {len(self.a)} vs {len(self.b)} values")
        if len(self.a) < 2:
            raise EvalError("paired sample needs n >= 2")
        values = self.a + self.b
        if not all(math.isfinite(v) for v in values):
            raise EvalError("sample values must be finite")

    @property
    def n(self) -> int:
        return len(self.a)

    def differences(self) -> np.ndarray:
        return np.asarray(self.a, dtype=float) - np.asarray(self.b, dtype=float)


def rtlx(r: TlxResponse) -> float:
    """Unweighted task-load score: the plain mean of the six subscales."""
    return float(np.mean(r.ratings()))


def umux_lite(r: UmuxResponse) -> float:
    """Two-item usability score rescaled to 0..100."""
    return ((r.pu - 1.0) + (r.peu - 1.0)) / 12.0 * 100.0


def paired_t_test(s: PairedSample) -> tuple[float, int, float]:
    """Two-tailed paired t-test: returns (t, df, p)."""
    d = s.differences()
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise DegenerateSampleError("paired differences have zero variance")
    t = float(d.mean()) * math.sqrt(s.n) / sd
    df = s.n - 1
    return t, df, t_two_tailed_p(t, df)


def cohens_dz(s: PairedSample) -> float:
    """Standardized mean of the paired differences (equals t / sqrt(n))."""
    d = s.differences()
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise DegenerateSampleError("paired differences have zero variance")
    return float(d.mean()) / sd


def within_subject_ci(matrix, level: float = 0.95) -> list[tuple[float, float]]:
    """Per-condition (mean, CI half-width) with subject offsets removed.

    Each subject's mean is subtracted and the grand mean added back before
    computing per-condition standard errors, which are then inflated by
    sqrt(J / (J - 1)) to keep the interval width unbiased.
    """
    x = np.asarray(matrix, dtype=float)
    if x.ndim != 2:
        raise EvalError("matrix must be subjects x conditions")
    n, j = x.shape
    if n < 2 or j < 2:
        raise EvalError(f"need >= 2 subjects and >= 2 conditions, got {n}x{j}")
    if not np.all(np.isfinite(x)):
        raise EvalError("matrix is incomplete (non-finite entries)")
    normalized = x - x.mean(axis=1, keepdims=True) + x.mean()
    correction = j / (j - 1.0)
    crit = t_critical(n - 1, level)
    out = []
    for col in range(j):
        mean = float(x[:, col].mean())
        var = float(normalized[:, col].var(ddof=1)) * correction
        half = crit * math.sqrt(var / n)
        out.append((mean, half))
    return out


# --- task timing -------------------------------------------------------------

def tct_summary(log_export: dict) -> dict:
    """Summarize a session log: per-blade completion times and action totals.

    Input is the session log export: ``{"blades": [{"serial", "actions":
    [{"id", "label", "start", "end"}, ...]}, ...]}``.
    """
    if not isinstance(log_export, dict) or not isinstance(log_export.get("blades"), list):
        raise EvalError("log export must contain a 'blades' list")
    blades_out = []
    action_totals = {i: 0.0 for i in range(1, 7)}
    tcts = []
    for blade in log_export["blades"]:
        if not isinstance(blade, dict) or "serial" not in blade \
                or not isinstance(blade.get("actions"), list) or not blade["actions"]:
            raise EvalError("malformed blade entry in log export")
        actions = blade["actions"]
        for a in actions:
            if not all(k in a for k in ("id", "start", "end")) \
                    or a["id"] not in action_totals or a["end"] < a["start"]:
                raise EvalError(f"malformed action entry {a!r}")
        tct = max(a["end"] for a in actions) - min(a["start"] for a in actions)
        tcts.append(tct)
        present = {a["id"] for a in actions}
        for a in actions:
            action_totals[a["id"]] += a["end"] - a["start"]
        blades_out.append({
            "serial": blade["serial"],
            "tct_s": tct,
            "action3_skipped": 3 not in present,
            "action4_skipped": 4 not in present,
        })
    arr = np.asarray(tcts, dtype=float)
    return {
        "blades": blades_out,
        "total_s": float(arr.sum()) if len(arr) else 0.0,
        "mean_s": float(arr.mean()) if len(arr) else 0.0,
        "sd_s": float(arr.std(ddof=1)) if len(arr) > 1 else 0.0,
        "action_totals_s": action_totals,
    }
