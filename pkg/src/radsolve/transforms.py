"""Problem instances and their derived transform tables.

For a component ``j`` of a problem instance the radial weight is

    H_j(r) = r^(N-1) * exp(integral_0^r h_j)

and the barrier function is

    A_j(r) = integral_0^r ( (1/H_j(t)) * integral_0^t H_j a_j )^(1/(p_j-1)) dt.

The growth scale F maps s >= anchor to

    F(s) = integral_anchor^s (1 + sum_j f_j(t, ..., t))^(1/(1 - min_j p_j)) dt,

a strictly increasing function whose tabulated inverse drives the upper
solution bound and the feasibility search for bounded solutions.  The
nonlinearities take d arguments; inside F they are evaluated on the diagonal
``f_j(s, ..., s)``.

The inner kernel of A_j is a 0/0 at t = 0 (H_j vanishes there); its limit is
0, and the tables define it so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import exprlang
from .exprlang import Expr, ExprError, ValidationReport, evaluate_array, validate_sampled
from .quadrature import (
    CumulativeInterpolant,
    DivergenceVerdict,
    GridFunction,
    ProbeConfig,
    RadialGrid,
    add_head,
    cumulative_gauss2,
    cumulative_trapezoid,
    power_weighted_cumulative,
    probe_divergence,
)

__all__ = [
    "ProblemSpec",
    "FTable",
    "FInverseRangeError",
    "TransformTables",
    "build_H",
    "build_A",
    "build_F",
    "eval_F",
    "invert_F",
    "invert_F_many",
    "estimate_A_inf",
    "estimate_F_inf",
    "build_transform_tables",
    "validate_hypotheses",
]

# default sampling step for the F table; fine enough that linear interpolation
# between nodes stays below 1e-8 for smooth integrands
F_TABLE_STEP = 5e-4
_MAX_F_NODES = 4_000_000


class FInverseRangeError(Exception):
    """Requested value lies at or beyond the finite limit of F."""


@dataclass(frozen=True)
class ProblemSpec:
    """A full problem instance.

    N      space dimension (integer >= 3)
    d      number of components (integer >= 1)
    p      exponent of the p-Laplacian per component, each > 1
    h      gradient-term coefficient per component, radial expression
    a      source coefficient per component, radial expression
    f      nonlinearity per component, expression in u1 .. ud
    anchor lower limit of the F integral, > 0
    """

    N: int
    d: int
    p: tuple[float, ...]
    h: tuple[Expr, ...]
    a: tuple[Expr, ...]
    f: tuple[Expr, ...]
    anchor: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3:
            raise ValueError("N must be an integer >= 3")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("d must be an integer >= 1")
        for name in ("p", "h", "a", "f"):
            if len(getattr(self, name)) != self.d:
                raise ValueError(f"{name} must have exactly d = {self.d} entries")
        if any(not pj > 1.0 for pj in self.p):
            raise ValueError("every exponent p_j must be > 1")
        if not (np.isfinite(self.anchor) and self.anchor > 0):
            raise ValueError("anchor must be positive and finite")

    @classmethod
    def from_strings(cls, N: int, d: int, p, h, a, f, anchor: float = 1.0) -> "ProblemSpec":
        """Build a spec from expression strings (single items allowed for d = 1)."""
        def listify(x):
            return [x] * d if isinstance(x, (str, int, float)) else list(x)
        p_list = [float(x) for x in listify(p)]
        h_list = [exprlang.parse(s, "radial") for s in listify(h)]
        a_list = [exprlang.parse(s, "radial") for s in listify(a)]
        f_list = [exprlang.parse(s, "nonlinearity", d) for s in listify(f)]
        return cls(int(N), int(d), tuple(p_list), tuple(h_list), tuple(a_list),
                   tuple(f_list), float(anchor))

    @property
    def min_p(self) -> float:
        return min(self.p)

    def h_values(self, j: int, r: np.ndarray) -> np.ndarray:
        return evaluate_array(self.h[j], {"r": r})

    def a_values(self, j: int, r: np.ndarray) -> np.ndarray:
        return evaluate_array(self.a[j], {"r": r})

    def f_values(self, j: int, u: Mapping[str, np.ndarray]) -> np.ndarray:
        return evaluate_array(self.f[j], u)

    def f_diagonal(self, j: int, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        env = {f"u{i}": s for i in range(1, self.d + 1)}
        return evaluate_array(self.f[j], env)

    def diagonal_integrand(self) -> Callable[[np.ndarray], np.ndarray]:
        """Integrand of F: (1 + sum_j f_j(s, .., s)) ** (1 / (1 - min_p))."""
        expo = 1.0 / (1.0 - self.min_p)

        def fn(s: np.ndarray) -> np.ndarray:
            s = np.asarray(s, dtype=float)
            total = np.zeros_like(s)
            for j in range(self.d):
                total = total + self.f_diagonal(j, s)
            return np.power(1.0 + total, expo)

        return fn


def _weight_parts(spec: ProblemSpec, grid: RadialGrid, j: int) -> tuple[np.ndarray, np.ndarray]:
    """(exp of the cumulative gradient coefficient, full weight H_j) on the grid."""
    r = grid.nodes
    hv = spec.h_values(j, r)
    if np.any(hv < 0):
        raise ValueError(f"h[{j}] takes negative values on the grid")
    expfac = np.exp(cumulative_trapezoid(r, hv))
    return expfac, r ** (spec.N - 1) * expfac


def build_H(spec: ProblemSpec, grid: RadialGrid, j: int) -> GridFunction:
    """Radial weight H_j = r^(N-1) * exp(cumulative h_j); H_j(0) = 0."""
    if not 0 <= j < spec.d:
        raise ValueError(f"component index {j} out of range for d = {spec.d}")
    _, H = _weight_parts(spec, grid, j)
    return GridFunction(grid, H)


def build_A(spec: ProblemSpec, grid: RadialGrid, j: int) -> GridFunction:
    """Barrier A_j on the grid; nondecreasing with A_j(0) = 0.

    The inner integral of ``H_j a_j`` uses the product rule so the division by
    ``H_j``, which vanishes at the origin, stays accurate; the kernel value at
    t = 0 is taken as its limit, 0.
    """
    if not 0 <= j < spec.d:
        raise ValueError(f"component index {j} out of range for d = {spec.d}")
    r = grid.nodes
    expfac, H = _weight_parts(spec, grid, j)
    av = spec.a_values(j, r)
    if np.any(av < 0):
        raise ValueError(f"a[{j}] takes negative values on the grid")
    inner = power_weighted_cumulative(r, expfac * av, spec.N - 1)
    ratio = np.zeros_like(r)
    ratio[1:] = inner[1:] / H[1:]
    if np.any(ratio < 0):
        raise RuntimeError("negative inner kernel value; nonnegative inputs cannot produce this")
    kernel = np.power(ratio, 1.0 / (spec.p[j] - 1.0))
    return GridFunction(grid, cumulative_trapezoid(r, kernel))


@dataclass(frozen=True)
class FTable:
    """Sampled strictly increasing F on [anchor, s_max] plus its integrand.

    Evaluation is piecewise linear between nodes and inversion solves the same
    linear pieces exactly, so the pair is mutually consistent by construction.
    Extension re-samples at the same step, it never extrapolates.
    """

    anchor: float
    step: float
    s: np.ndarray
    values: np.ndarray
    integrand: Callable = field(repr=False, compare=False)
    f_inf: DivergenceVerdict | None = field(default=None, compare=False)

    @property
    def s_max(self) -> float:
        return float(self.s[-1])


def build_F(spec_or_integrand, s_max: float, *, step: float = F_TABLE_STEP,
            f_inf: DivergenceVerdict | None = None, anchor: float | None = None) -> FTable:
    """Tabulate F on [anchor, s_max] with a 2-point Gauss rule per interval."""
    if isinstance(spec_or_integrand, ProblemSpec):
        integrand = spec_or_integrand.diagonal_integrand()
        anchor = spec_or_integrand.anchor if anchor is None else anchor
    else:
        integrand = spec_or_integrand
        if anchor is None:
            raise ValueError("anchor required when passing a bare integrand")
    if not s_max > anchor:
        raise ValueError("s_max must exceed the anchor")
    n = max(8, math.ceil((s_max - anchor) / step))
    if n > _MAX_F_NODES:
        # coarsen rather than lose coverage of [anchor, s_max]
        n = _MAX_F_NODES
        step = (s_max - anchor) / n
    nodes = np.linspace(anchor, anchor + n * step, n + 1)
    vals = cumulative_gauss2(nodes, integrand)
    if not np.all(np.diff(vals) > 0):
        raise RuntimeError("F table is not strictly increasing; integrand underflowed")
    return FTable(float(anchor), float(step), nodes, vals, integrand, f_inf)


def _extended(table: FTable, s_target: float) -> FTable:
    s_max = table.s_max
    while s_max < s_target:
        s_max *= 2.0
    return build_F(table.integrand, s_max, step=table.step,
                   f_inf=table.f_inf, anchor=table.anchor)


def eval_F(table: FTable, s) -> float | np.ndarray:
    """F at ``s`` by linear interpolation; ``s`` must lie inside the table."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < table.anchor * (1 - 1e-12) - 1e-300):
        raise ValueError(f"F is defined on [{table.anchor:g}, inf) only")
    if np.any(s_arr > table.s_max * (1 + 1e-12)):
        raise ValueError("query beyond the table; extend it first")
    out = np.interp(s_arr, table.s, table.values)
    return float(out) if np.isscalar(s) else out


def ensure_covers(table: FTable, s_target: float) -> FTable:
    if s_target <= table.s_max:
        return table
    return _extended(table, s_target)


def _cover_value(table: FTable, y_max: float, max_doublings: int = 60) -> FTable:
    for _ in range(max_doublings):
        if table.values[-1] >= y_max:
            return table
        fi = table.f_inf
        if fi is not None and fi.verdict == "converges" and fi.limit <= y_max:
            raise FInverseRangeError(
                f"value {y_max:g} is beyond the range of the inverse "
                f"(estimated F limit {fi.limit:g})")
        table = _extended(table, table.s_max * 2.0)
    raise RuntimeError("F table extension cap reached; the integral may converge")


def invert_F(table: FTable, y: float) -> tuple[float, FTable]:
    """Solve F(s) = y on the table, extending it on demand.

    Returns the solution together with the (possibly extended) table so the
    caller can keep the larger one.  Raises :class:`FInverseRangeError` when
    the tail estimate says F never reaches ``y``.
    """
    s, table = invert_F_many(table, np.asarray([y], dtype=float))
    return float(s[0]), table


def invert_F_many(table: FTable, ys: np.ndarray) -> tuple[np.ndarray, FTable]:
    ys = np.asarray(ys, dtype=float)
    if np.any(ys < 0):
        raise ValueError("inverse queries must be nonnegative")
    if ys.size:
        table = _cover_value(table, float(ys.max()))
    hi = np.searchsorted(table.values, ys, side="left")
    hi = np.clip(hi, 1, len(table.values) - 1)
    lo = hi - 1
    f0, f1 = table.values[lo], table.values[hi]
    s0, s1 = table.s[lo], table.s[hi]
    out = s0 + (ys - f0) * (s1 - s0) / (f1 - f0)
    return np.maximum(out, table.anchor), table


def estimate_F_inf(spec: ProblemSpec, probe: ProbeConfig = ProbeConfig()) -> DivergenceVerdict:
    """Tail probe of the F integral from the anchor; a convergent limit estimates F(inf)."""
    return probe_divergence(spec.diagonal_integrand(), spec.anchor,
                            probe.horizon_count, rho_conv=probe.rho_conv,
                            nodes_per_octave=probe.nodes_per_octave)


def estimate_A_inf(spec: ProblemSpec, j: int,
                   probe: ProbeConfig = ProbeConfig()) -> DivergenceVerdict:
    """Tail probe of the barrier integral; a convergent limit estimates A_j(inf).

    The probe runs on [r_start, inf); the dense head integral over
    [0, r_start] is added to a convergent limit so the estimate is the full
    A_j(inf).  Any evaluation failure (overflow of the weight far out, domain
    errors) yields an inconclusive verdict rather than an exception.
    """
    if not 0 <= j < spec.d:
        raise ValueError(f"component index {j} out of range for d = {spec.d}")
    t_max = probe.r_start * 2.0 ** probe.horizon_count
    expo = 1.0 / (spec.p[j] - 1.0)
    def weighted_source(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(over="ignore"):
            return np.exp(h_cum(s)) * spec.a_values(j, s)

    try:
        h_cum = CumulativeInterpolant(lambda s: spec.h_values(j, np.asarray(s, float)),
                                      t_max, power=0)
        inner = CumulativeInterpolant(weighted_source, t_max, power=spec.N - 1)
    except (ExprError, ValueError, FloatingPointError) as err:
        return DivergenceVerdict("inconclusive", note=f"barrier kernel not probeable: {err}")

    def integrand(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0
        tp = t[pos]
        with np.errstate(over="ignore"):
            weight = tp ** (spec.N - 1) * np.exp(h_cum(tp))
        ratio = np.where(np.isfinite(weight), inner(tp) / weight, 0.0)
        out[pos] = np.power(np.maximum(ratio, 0.0), expo)
        return out

    head_nodes = np.linspace(0.0, probe.r_start, 4097)
    head = float(np.trapezoid(integrand(head_nodes), head_nodes))
    verdict = probe_divergence(integrand, probe.r_start, probe.horizon_count,
                               rho_conv=probe.rho_conv,
                               nodes_per_octave=probe.nodes_per_octave)
    return add_head(verdict, head, note=f"limit includes head over [0, {probe.r_start:g}]")


@dataclass(frozen=True)
class TransformTables:
    """All transforms of one instance on one working grid; immutable once built."""

    grid: RadialGrid
    H: tuple[GridFunction, ...]
    A: tuple[GridFunction, ...]
    A_inf: tuple[DivergenceVerdict, ...]
    F: FTable
    F_inf: DivergenceVerdict


def build_transform_tables(spec: ProblemSpec, grid: RadialGrid,
                           probe: ProbeConfig = ProbeConfig(),
                           beta_scale: float = 1.0,
                           f_step: float = F_TABLE_STEP) -> TransformTables:
    """Assemble H_j, A_j, their tail estimates, and the F table.

    ``beta_scale`` is the largest central value the caller intends to use; the
    initial F table spans ``max(10 * d * beta_scale, anchor + 1)`` and grows on
    demand during inversion.
    """
    f_inf = estimate_F_inf(spec, probe)
    s_max = max(10.0 * spec.d * beta_scale, spec.anchor + 1.0)
    ftable = build_F(spec, s_max, step=f_step, f_inf=f_inf)
    H = tuple(build_H(spec, grid, j) for j in range(spec.d))
    A = tuple(build_A(spec, grid, j) for j in range(spec.d))
    A_inf = tuple(estimate_A_inf(spec, j, probe) for j in range(spec.d))
    return TransformTables(grid, H, A, A_inf, ftable, f_inf)


def validate_hypotheses(spec: ProblemSpec, r_max: float, u_max: float,
                        samples: int = 50) -> dict[str, ValidationReport]:
    """Sampled evidence for the structural hypotheses: h, a nonnegative and
    f nonnegative and nondecreasing.  Failures do not stop the solver; callers
    tag the run instead."""
    out: dict[str, ValidationReport] = {}
    rbox = {"r": (0.0, r_max)}
    ubox = {f"u{i}": (0.0, u_max) for i in range(1, spec.d + 1)}
    for j in range(spec.d):
        out[f"h[{j}] nonnegative"] = validate_sampled(spec.h[j], "nonnegativity", rbox, samples)
        out[f"a[{j}] nonnegative"] = validate_sampled(spec.a[j], "nonnegativity", rbox, samples)
        fsamples = max(2, min(samples, 20 if spec.d >= 3 else samples))
        out[f"f[{j}] nonnegative"] = validate_sampled(spec.f[j], "nonnegativity", ubox, fsamples)
        out[f"f[{j}] nondecreasing"] = validate_sampled(spec.f[j], "monotone", ubox, fsamples)
    return out
