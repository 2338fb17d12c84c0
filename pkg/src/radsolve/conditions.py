"""Classification of problem instances and the auxiliary growth conditions.

The classifier turns finite-horizon probe evidence into one of six verdicts:

* Thm1-large      growth scale F diverges and every barrier A_j diverges
* Thm1-bounded    F diverges and every A_j converges
* Thm2-bounded    F and every A_j converge and a feasible central value exists
* Thm3-large      every A_j diverges and the diagonal bracket is sublinear
* Thm3-bounded    every A_j converges and the diagonal bracket stays bounded
* inconclusive    the evidence does not settle any of the above

Every limit condition is probed on finite geometric horizons, so each
sub-verdict is three-valued (holds / fails / inconclusive) and carries its
numeric evidence.  The classifier never claims more certainty than the probes
provide: an inconclusive sub-verdict on anything required forces an
inconclusive overall verdict.

The module also houses stand-alone checkers for two classical blow-up
criteria (the inverse-square-root test on the primitive of f, and the
reciprocal test on f itself), two implication cross-checks against the
divergence of F, and the nested-integral criterion for the sublinear
two-component Laplacian system (which the general solver can cross-check).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exprlang import Expr, ExprError, evaluate_array
from .quadrature import (
    CumulativeInterpolant,
    DivergenceVerdict,
    ProbeConfig,
    add_head,
    classify_tail,
    probe_divergence,
)
from .transforms import (
    FTable,
    ProblemSpec,
    build_F,
    ensure_covers,
    estimate_A_inf,
    estimate_F_inf,
    eval_F,
)

__all__ = [
    "ConditionVerdict",
    "Classification",
    "ClassifierConfig",
    "LairInstance",
    "RemarkReport",
    "classify",
    "decide_theorem",
    "check_C6",
    "check_sublinearity",
    "check_sup_bounded",
    "check_keller_osserman",
    "check_ye_zhou",
    "check_remark_implications",
    "check_lair_proposition",
    "match_lair_form",
]

THEOREMS = ("Thm1-large", "Thm1-bounded", "Thm2-bounded",
            "Thm3-large", "Thm3-bounded", "inconclusive")


@dataclass(frozen=True)
class ConditionVerdict:
    status: str  # holds | fails | inconclusive
    evidence: dict
    note: str = ""

    def __post_init__(self):
        if self.status not in ("holds", "fails", "inconclusive"):
            raise ValueError(f"bad status {self.status!r}")


@dataclass(frozen=True)
class ClassifierConfig:
    """Probe horizons plus the diagonal-sequence knobs for the growth checks."""

    probe: ProbeConfig = ProbeConfig()
    seq_start: float = 10.0
    seq_factor: float = 4.0
    seq_count: int = 10
    sublinearity_threshold: float = 1e-2

    def __post_init__(self):
        if self.seq_count < 6:
            raise ValueError("seq_count must be >= 6")
        if self.seq_factor <= 1:
            raise ValueError("seq_factor must exceed 1")
        if self.seq_start <= 0:
            raise ValueError("seq_start must be positive")

    def sequence(self) -> np.ndarray:
        return self.seq_start * self.seq_factor ** np.arange(self.seq_count)


@dataclass(frozen=True)
class Classification:
    theorem: str
    conditions: dict[str, ConditionVerdict]
    beta_window: tuple[float, float] | None
    f_inf: DivergenceVerdict
    a_inf: tuple[DivergenceVerdict, ...]
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.theorem not in THEOREMS:
            raise ValueError(f"unknown theorem tag {self.theorem!r}")


def _tri_from_probe(v: DivergenceVerdict, want: str) -> ConditionVerdict:
    """holds when the probe verdict equals ``want`` ('diverges' or 'converges')."""
    other = "converges" if want == "diverges" else "diverges"
    evidence = {"verdict": v.verdict, "partials": list(v.partials),
                "horizons": list(v.horizons), "limit": v.limit}
    if v.verdict == want:
        return ConditionVerdict("holds", evidence, v.note)
    if v.verdict == other:
        return ConditionVerdict("fails", evidence, v.note)
    return ConditionVerdict("inconclusive", evidence, v.note)


def _barrier_tail_state(a_inf: tuple[DivergenceVerdict, ...]) -> str:
    kinds = {v.verdict for v in a_inf}
    if kinds == {"diverges"}:
        return "all_diverge"
    if kinds == {"converges"}:
        return "all_converge"
    if "inconclusive" in kinds:
        return "uncertain"
    return "mixed"


def decide_theorem(*, uniform_beta: bool, c3: str, c4: str, c5: str, c6: str,
                   sublinearity: str, sup_bounded: str, barrier_tail: str) -> str:
    """Pure verdict table; every argument is a tri-state status string.

    The infinitely-many-solutions verdicts take precedence when their
    hypotheses hold, so upgrading other evidence can only refine a verdict
    within the same bounded/large facet, never flip it.  Non-uniform central
    values only ever map to those verdicts.
    """
    if barrier_tail == "all_diverge" and sublinearity == "holds":
        return "Thm3-large"
    if barrier_tail == "all_converge" and sup_bounded == "holds":
        return "Thm3-bounded"
    if not uniform_beta:
        return "inconclusive"
    if c3 == "holds":
        if barrier_tail == "all_diverge":
            return "Thm1-large"
        if barrier_tail == "all_converge":
            return "Thm1-bounded"
        return "inconclusive"
    if c4 == "holds" and c5 == "holds" and c6 == "holds":
        return "Thm2-bounded"
    return "inconclusive"


def classify(spec: ProblemSpec, central_values: tuple[float, ...] | None = None,
             config: ClassifierConfig = ClassifierConfig()) -> Classification:
    """Probe all conditions and map them to the applicable theorem verdict."""
    beta = central_values if central_values is not None else (1.0,) * spec.d
    if len(beta) != spec.d:
        raise ValueError(f"expected {spec.d} central values")
    uniform = all(b == beta[0] for b in beta)

    f_inf = estimate_F_inf(spec, config.probe)
    a_inf = tuple(estimate_A_inf(spec, j, config.probe) for j in range(spec.d))
    tail = _barrier_tail_state(a_inf)

    c3 = _tri_from_probe(f_inf, "diverges")
    c4 = _tri_from_probe(f_inf, "converges")
    a_states = {"all_converge": "holds", "mixed": "fails", "all_diverge": "fails",
                "uncertain": "inconclusive"}
    c5 = ConditionVerdict(a_states[tail],
                          {"per_component": [v.verdict for v in a_inf],
                           "limits": [v.limit for v in a_inf]})

    beta_window = None
    notes: list[str] = []
    if c4.status == "holds" and c5.status == "holds":
        c6, beta_window = check_C6(spec, f_inf, a_inf, config)
    else:
        c6 = ConditionVerdict("inconclusive", {},
                              "not applicable: requires convergent F and barrier tails")

    sublin = check_sublinearity(spec, config)
    supb = check_sup_bounded(spec, config)

    theorem = decide_theorem(
        uniform_beta=uniform, c3=c3.status, c4=c4.status, c5=c5.status,
        c6=c6.status, sublinearity=sublin.status, sup_bounded=supb.status,
        barrier_tail=tail)
    if theorem == "inconclusive" and c3.status == "holds" and tail == "mixed":
        notes.append("existence is supported (F diverges) but the barrier tails are mixed, "
                     "so neither the bounded nor the large verdict applies")
    if not uniform:
        notes.append("central values are not uniform; only the multi-solution verdicts apply")
    if theorem.startswith("Thm2") and beta_window is not None:
        inside = beta_window[0] < beta[0] < beta_window[1] if uniform else False
        notes.append(f"given central value {'lies inside' if inside else 'lies outside'} "
                     f"the feasible window ({beta_window[0]:g}, {beta_window[1]:g})")

    return Classification(
        theorem=theorem,
        conditions={"C3": c3, "C4": c4, "C5": c5, "C6": c6,
                    "sublinearity": sublin, "sup_bounded": supb},
        beta_window=beta_window,
        f_inf=f_inf,
        a_inf=a_inf,
        notes=tuple(notes),
    )


def check_C6(spec: ProblemSpec, f_inf: DivergenceVerdict,
             a_inf: tuple[DivergenceVerdict, ...],
             config: ClassifierConfig = ClassifierConfig()) -> tuple[ConditionVerdict, tuple[float, float] | None]:
    """Feasible central-value search for the bounded-solution condition.

    Requires convergent estimates for F and every barrier.  The condition,
    sum_j A_j(inf) < F(inf) - F(d*beta) for some beta > anchor/d, is monotone:
    F increases, so feasibility at any beta implies feasibility of everything
    below it.  We test just above anchor/d and, when feasible, bisect for the
    largest feasible beta; the returned window is the open interval between
    anchor/d and that right end.
    """
    if f_inf.verdict != "converges":
        raise ValueError("C6 requires a convergent F tail estimate")
    if any(v.verdict != "converges" for v in a_inf):
        raise ValueError("C6 requires convergent barrier tail estimates")
    F_lim = float(f_inf.limit)
    total_A = float(sum(v.limit for v in a_inf))
    d, anchor = spec.d, spec.anchor

    table = build_F(spec, max(2.0 * anchor, anchor + 1.0), f_inf=f_inf)

    def gap(beta: float) -> tuple[float, FTable]:
        nonlocal table
        table = ensure_covers(table, d * beta)
        return F_lim - float(eval_F(table, d * beta)) - total_A, table

    beta_lo = (anchor / d) * (1.0 + 1e-6)
    g_lo, table = gap(beta_lo)
    trace: list[tuple[float, float]] = [(beta_lo, g_lo)]
    if g_lo <= 0.0:
        return (ConditionVerdict(
            "fails",
            {"F_limit": F_lim, "sum_A_limit": total_A, "gap_at_low": g_lo, "trace": trace},
            "the barrier tails already exceed the remaining F range just above anchor/d"),
            None)

    cap = spec.anchor * 2.0 ** config.probe.horizon_count / d
    lo, g_prev = beta_lo, g_lo
    hi = None
    beta = beta_lo
    while beta < cap:
        beta = min(2.0 * beta, cap)
        g, table = gap(beta)
        trace.append((beta, g))
        if g > g_prev + 1e-9 * (1.0 + abs(g_prev)):
            raise RuntimeError("feasibility gap increased with beta; F table is inconsistent")
        if g <= 0.0:
            hi = beta
            break
        lo, g_prev = beta, g
    if hi is None:
        window = (anchor / d, cap)
        return (ConditionVerdict(
            "holds",
            {"F_limit": F_lim, "sum_A_limit": total_A, "gap_at_low": g_lo,
             "beta_max": cap, "capped": True, "trace": trace},
            "feasible everywhere probed; right end capped at the probe horizon"),
            window)

    for _ in range(200):
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        g, table = gap(mid)
        trace.append((mid, g))
        if g > 0.0:
            lo = mid
        else:
            hi = mid
    beta_max = 0.5 * (lo + hi)
    g_final, table = gap(beta_max)
    return (ConditionVerdict(
        "holds",
        {"F_limit": F_lim, "sum_A_limit": total_A, "gap_at_low": g_lo,
         "beta_max": beta_max, "gap_at_beta_max": g_final, "capped": False,
         "trace": trace},
        ""),
        (anchor / d, beta_max))


def _bracket_values(spec: ProblemSpec, s: np.ndarray) -> np.ndarray:
    """sum_i (1 + f_i(s, .., s)) ** (1 / (min_p - 1)) along the diagonal."""
    expo = 1.0 / (spec.min_p - 1.0)
    total = np.zeros_like(s)
    for i in range(spec.d):
        total = total + np.power(1.0 + spec.f_diagonal(i, s), expo)
    return total


def check_sublinearity(spec: ProblemSpec,
                       config: ClassifierConfig = ClassifierConfig()) -> ConditionVerdict:
    """Does the diagonal bracket grow slower than s?

    Evaluates bracket(s)/s along the geometric sequence; holds when the tail
    decreases and its last value sits below the threshold, fails when the tail
    is nondecreasing (positive values bounded away from zero), inconclusive
    otherwise.
    """
    s = config.sequence()
    try:
        ratios = _bracket_values(spec, s) / s
    except ExprError as err:
        return ConditionVerdict("inconclusive", {"error": str(err)},
                                "bracket not evaluable along the sequence")
    tail_len = max(2, len(ratios) // 2)
    tail = ratios[-tail_len:]
    diffs = np.diff(tail)
    eps = 1e-9 * np.maximum(tail[:-1], 1e-300)
    evidence = {"s": s.tolist(), "ratios": ratios.tolist(),
                "threshold": config.sublinearity_threshold}
    if np.all(diffs < -eps) and tail[-1] < config.sublinearity_threshold:
        return ConditionVerdict("holds", evidence)
    if np.all(diffs >= -eps):
        return ConditionVerdict("fails", evidence,
                                "tail ratios are nondecreasing, hence bounded away from zero")
    if np.all(diffs < 0.0):
        # decreasing but not yet small: extrapolate the decrements; a clearly
        # positive limit means the ratio is bounded away from zero
        decs = np.maximum(-np.diff(ratios), 0.0)
        verdict, extra, _ = classify_tail(decs, config.probe.rho_conv)
        if verdict == "converges":
            limit = float(ratios[-1] - extra)
            evidence["extrapolated_limit"] = limit
            if limit >= config.sublinearity_threshold:
                return ConditionVerdict("fails", evidence,
                                        "tail ratios level off above the threshold")
    return ConditionVerdict("inconclusive", evidence)


def check_sup_bounded(spec: ProblemSpec,
                      config: ClassifierConfig = ClassifierConfig()) -> ConditionVerdict:
    """Does the diagonal bracket stay bounded as s grows?

    The bracket is nondecreasing for monotone nonlinearities, so its
    increments along the geometric sequence are classified exactly like the
    partial integrals of a tail probe: geometrically shrinking increments mean
    a finite plateau (holds), nondecreasing increments mean growth (fails).
    """
    s = np.concatenate([[0.0], config.sequence()])
    try:
        vals = _bracket_values(spec, s)
    except ExprError as err:
        return ConditionVerdict("inconclusive", {"error": str(err)},
                                "bracket not evaluable along the sequence")
    incs = np.maximum(np.diff(vals), 0.0)
    verdict, extra, ratios = classify_tail(incs, config.probe.rho_conv)
    evidence = {"s": s.tolist(), "bracket": vals.tolist(), "tail_ratios": list(ratios)}
    if verdict == "converges":
        evidence["plateau"] = float(vals[-1] + extra)
        return ConditionVerdict("holds", evidence)
    if verdict == "diverges":
        return ConditionVerdict("fails", evidence, "bracket keeps growing")
    return ConditionVerdict("inconclusive", evidence)


def check_keller_osserman(f_diag: Callable, probe: ProbeConfig = ProbeConfig()) -> DivergenceVerdict:
    """Probe the inverse-square-root growth test on the primitive of f.

    Divergence of the probed integral is the classical threshold allowing
    blow-up solutions.  A vanishing primitive makes the integrand infinite,
    which the probe reports as inconclusive with a note.
    """
    t_max = probe.r_start * 2.0 ** probe.horizon_count
    primitive = CumulativeInterpolant(f_diag, t_max, power=0)

    def integrand(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            return np.power(primitive(s), -0.5)

    return probe_divergence(integrand, probe.r_start, probe.horizon_count,
                            rho_conv=probe.rho_conv,
                            nodes_per_octave=probe.nodes_per_octave)


def check_ye_zhou(f_diag: Callable, probe: ProbeConfig = ProbeConfig()) -> DivergenceVerdict:
    """Probe the reciprocal growth test on f itself."""

    def integrand(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            vals = np.asarray(f_diag(t), dtype=float)
            return 1.0 / vals

    return probe_divergence(integrand, probe.r_start, probe.horizon_count,
                            rho_conv=probe.rho_conv,
                            nodes_per_octave=probe.nodes_per_octave)


@dataclass(frozen=True)
class RemarkReport:
    """Cross-check of the two integral conditions implied by a divergent F."""

    applicable: bool
    reciprocal_power: tuple[DivergenceVerdict, ...]
    primitive_root: tuple[DivergenceVerdict, ...]
    consistent: bool | None
    note: str = ""


def check_remark_implications(spec: ProblemSpec, c3_status: str,
                              probe: ProbeConfig = ProbeConfig()) -> RemarkReport:
    """When F diverges, two companion integrals must diverge as well.

    Both are probed per component from the anchor:  ds over
    f_j(s,..,s)^(1/(min_p - 1)), and dt over the min_p-th root of the
    primitive of the diagonal.  A convergent probe against a divergent F is
    flagged as a numerical contradiction worth investigating; nothing here can
    prove the implication, it can only expose inconsistent evidence.
    """
    expo1 = 1.0 / (spec.min_p - 1.0)
    expo2 = 1.0 / spec.min_p
    t_max = spec.anchor * 2.0 ** probe.horizon_count
    r1 = []
    r2 = []
    for j in range(spec.d):
        def integrand1(s, j=j):
            s = np.asarray(s, dtype=float)
            with np.errstate(divide="ignore"):
                return np.power(spec.f_diagonal(j, s), -expo1)

        r1.append(probe_divergence(integrand1, spec.anchor, probe.horizon_count,
                                   rho_conv=probe.rho_conv,
                                   nodes_per_octave=probe.nodes_per_octave))

        try:
            primitive = CumulativeInterpolant(
                lambda s, j=j: spec.f_diagonal(j, np.asarray(s, float)), t_max, power=0)
        except (ExprError, ValueError) as err:
            r2.append(DivergenceVerdict("inconclusive", note=f"primitive not computable: {err}"))
            continue

        def integrand2(t, primitive=primitive):
            t = np.asarray(t, dtype=float)
            with np.errstate(divide="ignore"):
                return np.power(primitive(t), -expo2)

        r2.append(probe_divergence(integrand2, spec.anchor, probe.horizon_count,
                                   rho_conv=probe.rho_conv,
                                   nodes_per_octave=probe.nodes_per_octave))

    if c3_status != "holds":
        return RemarkReport(False, tuple(r1), tuple(r2), None,
                            "not applicable: F divergence is not established")
    statuses = [v.verdict for v in r1]
    if any(s == "converges" for s in statuses):
        return RemarkReport(True, tuple(r1), tuple(r2), False,
                            "numerical contradiction: F diverges but a reciprocal-power "
                            "integral converges; investigate probe horizons")
    if any(s == "inconclusive" for s in statuses):
        return RemarkReport(True, tuple(r1), tuple(r2), None,
                            "implication undecided: some probes are inconclusive")
    return RemarkReport(True, tuple(r1), tuple(r2), True, "")


@dataclass(frozen=True)
class LairInstance:
    """Two-component Laplacian system with sublinear power couplings."""

    a1: Expr
    a2: Expr
    alpha: float
    beta_exp: float
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3:
            raise ValueError("N must be an integer >= 3")
        if self.alpha <= 0 or self.beta_exp <= 0:
            raise ValueError("exponents must be positive")

    @property
    def within_sublinear_range(self) -> bool:
        return self.alpha <= 1.0 and self.beta_exp <= 1.0


def check_lair_proposition(inst: LairInstance,
                           probe: ProbeConfig = ProbeConfig()) -> tuple[DivergenceVerdict, DivergenceVerdict]:
    """Probe the pair of nested integrals whose joint divergence predicts an
    explosive solution of the two-component system.

    Each integrand is t * a_out(t) * (t^(2-N) * nested(t))^exponent where
    nested stacks two weighted primitives of the other coefficient.  Outside
    the sublinear exponent range the probes still run, but the prediction is
    not theorem-backed; callers should consult ``within_sublinear_range``.
    """
    t_max = probe.r_start * 2.0 ** probe.horizon_count

    def one_side(a_out: Expr, a_in: Expr, expo: float) -> DivergenceVerdict:
        try:
            inner = CumulativeInterpolant(
                lambda tau: evaluate_array(a_in, {"r": np.asarray(tau, float)}),
                t_max, power=1)
            nested = CumulativeInterpolant(lambda s: inner(s), t_max, power=inst.N - 3)
        except (ExprError, ValueError) as err:
            return DivergenceVerdict("inconclusive", note=f"nested kernel not probeable: {err}")

        def integrand(t):
            t = np.asarray(t, dtype=float)
            out = np.zeros_like(t)
            pos = t > 0
            tp = t[pos]
            av = evaluate_array(a_out, {"r": tp})
            out[pos] = tp * av * np.power(tp ** (2.0 - inst.N) * nested(tp), expo)
            return out

        head_nodes = np.linspace(0.0, probe.r_start, 4097)
        head = float(np.trapezoid(integrand(head_nodes), head_nodes))
        verdict = probe_divergence(integrand, probe.r_start, probe.horizon_count,
                                   rho_conv=probe.rho_conv,
                                   nodes_per_octave=probe.nodes_per_octave)
        return add_head(verdict, head, note=f"limit includes head over [0, {probe.r_start:g}]")

    return (one_side(inst.a1, inst.a2, inst.alpha),
            one_side(inst.a2, inst.a1, inst.beta_exp))


def _power_of(e: Expr, var: str) -> float | None:
    """Exponent c when ``e`` is exactly ``var`` or ``var ^ c`` with numeric c."""
    if e.kind == "var" and e.name == var:
        return 1.0
    if (e.kind == "pow" and e.args[0].kind == "var" and e.args[0].name == var
            and e.args[1].kind == "num"):
        return e.args[1].value
    return None


def _is_zero_expr(e: Expr) -> bool:
    sample = np.linspace(0.0, 16.0, 65)
    try:
        return bool(np.all(evaluate_array(e, {"r": sample}) == 0.0))
    except ExprError:
        return False


def match_lair_form(spec: ProblemSpec) -> LairInstance | None:
    """Recognize the two-component pure-Laplacian cross-power shape.

    Requires d = 2, both exponents equal to 2, vanishing gradient
    coefficients, and nonlinearities that are plain powers of the opposite
    component.  Returns None when the instance does not match.
    """
    if spec.d != 2 or spec.p != (2.0, 2.0):
        return None
    if not (_is_zero_expr(spec.h[0]) and _is_zero_expr(spec.h[1])):
        return None
    alpha = _power_of(spec.f[0], "u2")
    beta_exp = _power_of(spec.f[1], "u1")
    if alpha is None or beta_exp is None or alpha <= 0 or beta_exp <= 0:
        return None
    return LairInstance(spec.a[0], spec.a[1], alpha, beta_exp, spec.N)
