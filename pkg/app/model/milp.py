"""
Translation of a ScheduleProblem into a mixed-integer linear program.

Variables are stored in five T x M blocks (h, p_e, p_su, z_on, z_su) followed by
one p_grid entry per hour. The program is a maximization:

    max  sum_t price_t * p_grid_t + hydrogen_price * sum_{t,m} h_{t,m}
    s.t. row_lower <= A x <= row_upper,  lower <= x <= upper,
         z_on, z_su integral

Rows are grouped in named families, in this order:

    hydrogen_curve    h - a_i p_e - b_i C (z_on - z_su) <= 0         |I| T M
    operating_range   C_min (z_on - z_su) - p_e <= 0, p_e - C (z_on - z_su) <= 0    2 T M
    export_limit      p_grid <= P_max                                 T
    ramp_up           p_e[t] - p_e[t-1] <= R                          T M
    ramp_down         p_e[t-1] - p_e[t] <= R                          T M
    startup_logic_a   z_su[t] + z_on[t-1] <= 1                        T M
    startup_logic_b   z_su - z_on <= 0                                T M
    startup_logic_c   z_on[t] - z_on[t-1] - z_su[t] <= 0              T M
    startup_cost      p_su - C_su z_su = 0                            T M
    power_balance     p_grid + sum_m p_e + sum_m p_su <= P_avail      T

Hour -1 references (ramps and startup logic) move to the right-hand side using
the fleet's initial state. A terminal power cap on the problem tightens the
upper bound of p_e in the last hour.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from app.model.problem import ScheduleProblem

logger = logging.getLogger(__name__)

BLOCKS = ("h", "p_e", "p_su", "z_on", "z_su")
ROW_FAMILIES = (
    "hydrogen_curve",
    "operating_range",
    "export_limit",
    "ramp_up",
    "ramp_down",
    "startup_logic_a",
    "startup_logic_b",
    "startup_logic_c",
    "startup_cost",
    "power_balance",
)


@dataclass(frozen=True)
class VariableIndex:
    """Column positions of the MILP variables."""

    horizon: int
    n_modules: int

    @property
    def block_size(self) -> int:
        return self.horizon * self.n_modules

    @property
    def n_variables(self) -> int:
        return len(BLOCKS) * self.block_size + self.horizon

    def _column(self, block: str, t: int, m: int) -> int:
        return BLOCKS.index(block) * self.block_size + t * self.n_modules + m

    def h(self, t: int, m: int) -> int:
        return self._column("h", t, m)

    def p_e(self, t: int, m: int) -> int:
        return self._column("p_e", t, m)

    def p_su(self, t: int, m: int) -> int:
        return self._column("p_su", t, m)

    def z_on(self, t: int, m: int) -> int:
        return self._column("z_on", t, m)

    def z_su(self, t: int, m: int) -> int:
        return self._column("z_su", t, m)

    def p_grid(self, t: int) -> int:
        return len(BLOCKS) * self.block_size + t

    def block(self, name: str) -> slice:
        if name == "p_grid":
            return slice(len(BLOCKS) * self.block_size, self.n_variables)
        start = BLOCKS.index(name) * self.block_size
        return slice(start, start + self.block_size)

    def unpack(self, x: np.ndarray) -> Dict[str, np.ndarray]:
        """Split a solution vector into (T, M) arrays per block plus p_grid of shape (T,)."""
        shape = (self.horizon, self.n_modules)
        out = {name: np.asarray(x[self.block(name)], dtype=float).reshape(shape) for name in BLOCKS}
        out["p_grid"] = np.asarray(x[self.block("p_grid")], dtype=float)
        return out

    def pack(self, blocks: Dict[str, np.ndarray]) -> np.ndarray:
        x = np.zeros(self.n_variables)
        for name in BLOCKS:
            x[self.block(name)] = np.asarray(blocks[name], dtype=float).ravel()
        x[self.block("p_grid")] = np.asarray(blocks["p_grid"], dtype=float)
        return x

    def names(self) -> List[str]:
        names = [
            f"{block}_{t}_{m}" for block in BLOCKS for t in range(self.horizon) for m in range(self.n_modules)
        ]
        return names + [f"p_grid_{t}" for t in range(self.horizon)]


@dataclass(frozen=True, eq=False)
class MilpInstance:
    """Immutable MILP in row-bounded form (maximization)."""

    objective: np.ndarray
    matrix: sparse.csr_matrix
    row_lower: np.ndarray
    row_upper: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integrality: np.ndarray
    row_families: Dict[str, Tuple[int, int]]
    index: VariableIndex
    problem: Optional[ScheduleProblem] = field(default=None, repr=False)

    @property
    def n_rows(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def n_variables(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def variable_names(self) -> List[str]:
        return self.index.names()

    @property
    def branch_candidates(self) -> np.ndarray:
        """z_on columns; z_su follows from them through the startup rows."""
        return np.arange(self.n_variables)[self.index.block("z_on")]

    def family_counts(self) -> Dict[str, int]:
        return {name: stop - start for name, (start, stop) in self.row_families.items()}

    def family_rows(self, name: str) -> slice:
        start, stop = self.row_families[name]
        return slice(start, stop)


class _RowBuilder:
    """Accumulates COO triplets one row at a time."""

    def __init__(self) -> None:
        self.rows: List[int] = []
        self.cols: List[int] = []
        self.vals: List[float] = []
        self.lower: List[float] = []
        self.upper: List[float] = []
        self.families: Dict[str, Tuple[int, int]] = {}
        self._family: Optional[str] = None
        self._family_start = 0

    @property
    def n_rows(self) -> int:
        return len(self.lower)

    def begin(self, family: str) -> None:
        self._family = family
        self._family_start = self.n_rows

    def end(self) -> None:
        assert self._family is not None
        self.families[self._family] = (self._family_start, self.n_rows)
        self._family = None

    def add(self, terms: List[Tuple[int, float]], lower: float, upper: float) -> None:
        r = self.n_rows
        for col, val in terms:
            if val != 0.0:
                self.rows.append(r)
                self.cols.append(col)
                self.vals.append(val)
        self.lower.append(lower)
        self.upper.append(upper)

    def matrix(self, n_cols: int) -> sparse.csr_matrix:
        coo = sparse.coo_matrix((self.vals, (self.rows, self.cols)), shape=(self.n_rows, n_cols))
        return coo.tocsr()


def build_milp(problem: ScheduleProblem) -> MilpInstance:
    """Emit the MILP of a scheduling problem."""
    T, M = problem.horizon, problem.n_modules
    spec = problem.spec
    C, C_min, R, C_su = spec.c_max, spec.c_min, spec.ramp_limit, spec.startup_energy
    on0 = [1.0 if v else 0.0 for v in problem.fleet.initial_on_state]
    p0 = list(problem.fleet.initial_power)
    pwl = problem.pwl
    idx = VariableIndex(T, M)
    inf = np.inf
    rb = _RowBuilder()

    rb.begin("hydrogen_curve")
    for t in range(T):
        for m in range(M):
            for seg in pwl.segments:
                rb.add(
                    [
                        (idx.h(t, m), 1.0),
                        (idx.p_e(t, m), -seg.slope),
                        (idx.z_on(t, m), -seg.intercept * C),
                        (idx.z_su(t, m), seg.intercept * C),
                    ],
                    -inf,
                    0.0,
                )
    rb.end()

    rb.begin("operating_range")
    for t in range(T):
        for m in range(M):
            rb.add([(idx.z_on(t, m), C_min), (idx.z_su(t, m), -C_min), (idx.p_e(t, m), -1.0)], -inf, 0.0)
    for t in range(T):
        for m in range(M):
            rb.add([(idx.p_e(t, m), 1.0), (idx.z_on(t, m), -C), (idx.z_su(t, m), C)], -inf, 0.0)
    rb.end()

    rb.begin("export_limit")
    for t in range(T):
        rb.add([(idx.p_grid(t), 1.0)], -inf, float(problem.export_limits[t]))
    rb.end()

    rb.begin("ramp_up")
    for t in range(T):
        for m in range(M):
            if t == 0:
                rb.add([(idx.p_e(0, m), 1.0)], -inf, R + p0[m])
            else:
                rb.add([(idx.p_e(t, m), 1.0), (idx.p_e(t - 1, m), -1.0)], -inf, R)
    rb.end()

    rb.begin("ramp_down")
    for t in range(T):
        for m in range(M):
            if t == 0:
                rb.add([(idx.p_e(0, m), -1.0)], -inf, R - p0[m])
            else:
                rb.add([(idx.p_e(t - 1, m), 1.0), (idx.p_e(t, m), -1.0)], -inf, R)
    rb.end()

    rb.begin("startup_logic_a")
    for t in range(T):
        for m in range(M):
            if t == 0:
                rb.add([(idx.z_su(0, m), 1.0)], -inf, 1.0 - on0[m])
            else:
                rb.add([(idx.z_su(t, m), 1.0), (idx.z_on(t - 1, m), 1.0)], -inf, 1.0)
    rb.end()

    rb.begin("startup_logic_b")
    for t in range(T):
        for m in range(M):
            rb.add([(idx.z_su(t, m), 1.0), (idx.z_on(t, m), -1.0)], -inf, 0.0)
    rb.end()

    rb.begin("startup_logic_c")
    for t in range(T):
        for m in range(M):
            if t == 0:
                rb.add([(idx.z_on(0, m), 1.0), (idx.z_su(0, m), -1.0)], -inf, on0[m])
            else:
                rb.add(
                    [(idx.z_on(t, m), 1.0), (idx.z_on(t - 1, m), -1.0), (idx.z_su(t, m), -1.0)],
                    -inf,
                    0.0,
                )
    rb.end()

    rb.begin("startup_cost")
    for t in range(T):
        for m in range(M):
            rb.add([(idx.p_su(t, m), 1.0), (idx.z_su(t, m), -C_su)], 0.0, 0.0)
    rb.end()

    rb.begin("power_balance")
    for t in range(T):
        terms = [(idx.p_grid(t), 1.0)]
        terms += [(idx.p_e(t, m), 1.0) for m in range(M)]
        terms += [(idx.p_su(t, m), 1.0) for m in range(M)]
        rb.add(terms, -inf, float(problem.availabilities[t]))
    rb.end()

    n = idx.n_variables
    objective = np.zeros(n)
    objective[idx.block("h")] = spec.hydrogen_price
    objective[idx.block("p_grid")] = problem.prices

    lower = np.zeros(n)
    upper = np.zeros(n)
    upper[idx.block("h")] = float(pwl.evaluate(C, C)[0])
    upper[idx.block("p_e")] = C
    upper[idx.block("p_su")] = C_su
    upper[idx.block("z_on")] = 1.0
    upper[idx.block("z_su")] = 1.0
    upper[idx.block("p_grid")] = problem.export_limits
    if problem.terminal_power_cap is not None:
        last = [idx.p_e(T - 1, m) for m in range(M)]
        upper[last] = min(C, problem.terminal_power_cap)

    integrality = np.zeros(n, dtype=int)
    integrality[idx.block("z_on")] = 1
    integrality[idx.block("z_su")] = 1

    instance = MilpInstance(
        objective=objective,
        matrix=rb.matrix(n),
        row_lower=np.array(rb.lower),
        row_upper=np.array(rb.upper),
        lower=lower,
        upper=upper,
        integrality=integrality,
        row_families=dict(rb.families),
        index=idx,
        problem=problem,
    )
    logger.info(f"MILP built: {instance.n_variables} variables, {instance.n_rows} rows (T={T}, M={M})")
    return instance


def expected_family_counts(horizon: int, n_modules: int, n_segments: int) -> Dict[str, int]:
    """Closed-form row count of every family."""
    tm = horizon * n_modules
    return {
        "hydrogen_curve": n_segments * tm,
        "operating_range": 2 * tm,
        "export_limit": horizon,
        "ramp_up": tm,
        "ramp_down": tm,
        "startup_logic_a": tm,
        "startup_logic_b": tm,
        "startup_logic_c": tm,
        "startup_cost": tm,
        "power_balance": horizon,
    }


def _format_terms(coefs: np.ndarray, cols: np.ndarray, names: List[str], per_line: int = 6) -> str:
    if len(cols) == 0:
        return "0 " + names[0]
    parts = [f"{'+' if c >= 0 else '-'} {abs(c):.12g} {names[j]}" for c, j in zip(coefs, cols)]
    lines = [" ".join(parts[i : i + per_line]) for i in range(0, len(parts), per_line)]
    return "\n   ".join(lines)


def write_lp_file(instance: MilpInstance, path: Union[str, Path]) -> Path:
    """Dump the instance in CPLEX LP format for cross-checking with external solvers."""
    out = Path(path)
    names = instance.variable_names
    obj_cols = np.nonzero(instance.objective)[0]
    lines = [
        f"\\ electrolyzer schedule T={instance.index.horizon} M={instance.index.n_modules}",
        "Maximize",
        " obj: " + _format_terms(instance.objective[obj_cols], obj_cols, names),
        "Subject To",
    ]

    counters: Dict[str, int] = {}
    families = sorted(instance.row_families.items(), key=lambda item: item[1][0])
    for family, (start, stop) in families:
        for r in range(start, stop):
            row = instance.matrix.getrow(r)
            expr = _format_terms(row.data, row.indices, names)
            k = counters.get(family, 0)
            counters[family] = k + 1
            lo, hi = instance.row_lower[r], instance.row_upper[r]
            label = f"{family}_{k}"
            if lo == hi:
                lines.append(f" {label}: {expr} = {hi:.12g}")
                continue
            if np.isfinite(hi):
                lines.append(f" {label}: {expr} <= {hi:.12g}")
            if np.isfinite(lo):
                suffix = "_lo" if np.isfinite(hi) else ""
                lines.append(f" {label}{suffix}: {expr} >= {lo:.12g}")

    lines.append("Bounds")
    for j, name in enumerate(names):
        if instance.integrality[j]:
            continue
        lines.append(f" {instance.lower[j]:.12g} <= {name} <= {instance.upper[j]:.12g}")
    lines.append("Binaries")
    binaries = [names[j] for j in np.nonzero(instance.integrality)[0]]
    for i in range(0, len(binaries), 8):
        lines.append(" " + " ".join(binaries[i : i + 8]))
    lines.append("End")

    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Wrote LP dump to {out}")
    return out
