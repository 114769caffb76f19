"""Dense two-phase primal simplex with Bland's anti-cycling safeguard.

Maximization convention.  Free variables are split into differences of two
non-negative columns internally.  Pricing is deterministic: most-negative
reduced cost with largest-pivot tie-breaking for numerical safety, falling
back to Bland's rule whenever the objective stalls on degenerate pivots,
which guarantees termination.  No presolve.  Optimal solutions are
certified by a residual check before being returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SimplexIterationLimit

FEASIBILITY_TOLERANCE = 1e-9
RESIDUAL_TOLERANCE = 1e-7
DEFAULT_MAX_ITERATIONS = 200_000
STALL_LIMIT = 40  # degenerate pivots before switching to Bland's rule
REFRESH_EVERY = 300  # pivots between rebuilds of the tableau from original data

LESS, EQUAL, GREATER = "<=", "=", ">="
NONNEG, FREE = ">=0", "free"


@dataclass
class LpRow:
    coeffs: list[tuple[int, float]]  # sparse (variable index, value)
    sense: str
    rhs: float


@dataclass
class LpProblem:
    """max objective . x  subject to rows, with per-variable sign bounds."""

    objective: list[float]
    rows: list[LpRow] = field(default_factory=list)
    bounds: list[str] | None = None  # default: all non-negative

    @property
    def num_variables(self) -> int:
        return len(self.objective)

    def add_row(self, coeffs: dict[int, float] | list[tuple[int, float]], sense: str, rhs: float):
        if isinstance(coeffs, dict):
            coeffs = sorted(coeffs.items())
        assert sense in (LESS, EQUAL, GREATER)
        self.rows.append(
            LpRow(coeffs=[(int(i), float(v)) for i, v in coeffs], sense=sense, rhs=float(rhs))
        )

    def to_dict(self) -> dict:
        return {
            "objective": [float(c) for c in self.objective],
            "rows": [
                {"coeffs": [[i, v] for i, v in row.coeffs], "sense": row.sense, "rhs": row.rhs}
                for row in self.rows
            ],
            "bounds": list(self.bounds) if self.bounds is not None else [NONNEG] * self.num_variables,
        }


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    objective_value: float | None
    x: np.ndarray | None


def _pivot(tableau: np.ndarray, basis: list[int], row: int, col: int) -> None:
    tableau[row, :] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row, :])
    tableau[:, col] = 0.0
    tableau[row, col] = 1.0
    basis[row] = col


def _build_tableau(A: np.ndarray, b: np.ndarray, cost: np.ndarray, basis: list[int]):
    """Exact tableau for the given basis, computed from the original data.

    Returns None if the basis matrix is numerically singular (caller keeps
    its current tableau) or if the basic point is badly infeasible.
    """
    m, n = A.shape
    B = A[:, basis]
    try:
        rows = np.linalg.solve(B, A)
        rhs = np.linalg.solve(B, b)
    except np.linalg.LinAlgError:
        return None
    if rhs.min(initial=0.0) < -1e-6:
        return None
    np.maximum(rhs, 0.0, out=rhs)
    tableau = np.zeros((m + 1, n + 1))
    tableau[:m, :n] = rows
    tableau[:m, n] = rhs
    cb = cost[basis]
    tableau[m, :n] = cost - cb @ rows
    tableau[m, n] = -float(cb @ rhs)
    for r, col in enumerate(basis):  # remove rounding residue on basic columns
        tableau[:, col] = 0.0
        tableau[r, col] = 1.0
    return tableau


def _run_simplex(A, b, cost, basis, tol, max_iter, budget) -> tuple[str, np.ndarray]:
    """Minimize cost.x over Ax = b, x >= 0 from a starting basis.

    Deterministic pricing: most-negative reduced cost with largest-pivot
    tie-breaking, Bland's rule after STALL_LIMIT degenerate pivots.  The
    tableau is rebuilt from the original data every REFRESH_EVERY pivots and
    before any optimal/unbounded verdict, so accumulated float drift cannot
    corrupt the outcome.  Returns the verdict and the final tableau.
    """
    m, ncols = A.shape
    tableau = _build_tableau(A, b, cost, basis)
    assert tableau is not None, "starting basis must be factorizable"
    stall = 0
    since_refresh = 0
    last_value = tableau[m, ncols]
    while True:
        budget[0] += 1
        if budget[0] > max_iter:
            raise SimplexIterationLimit(f"exceeded {max_iter} simplex iterations")
        obj = tableau[m, :ncols]
        use_bland = stall >= STALL_LIMIT
        if use_bland:
            candidates = np.nonzero(obj < -tol)[0]
            entering = int(candidates[0]) if candidates.size else -1
        else:
            entering = int(np.argmin(obj))
            if obj[entering] >= -tol:
                entering = -1
        if entering < 0:
            if since_refresh == 0:
                return "optimal", tableau
            rebuilt = _build_tableau(A, b, cost, basis)  # verify before claiming
            if rebuilt is None:
                return "optimal", tableau
            tableau, since_refresh = rebuilt, 0
            if tableau[m, :ncols].min() >= -tol:
                return "optimal", tableau
            continue
        column = tableau[:m, entering]
        eligible = np.nonzero(column > tol)[0]
        if eligible.size == 0:
            if since_refresh == 0:
                return "unbounded", tableau
            rebuilt = _build_tableau(A, b, cost, basis)  # verify before claiming
            if rebuilt is None:
                return "unbounded", tableau
            tableau, since_refresh = rebuilt, 0
            if tableau[m, entering] < -tol and tableau[:m, entering].max(initial=0.0) <= tol:
                return "unbounded", tableau
            continue
        ratios = tableau[eligible, ncols] / column[eligible]
        best = float(ratios.min())
        ties = eligible[ratios <= best + tol * (1.0 + abs(best))]
        if use_bland:
            leaving = int(min(ties, key=lambda r: basis[r]))
        else:
            leaving = int(max(ties, key=lambda r: column[r]))
        _pivot(tableau, basis, leaving, entering)
        since_refresh += 1
        if since_refresh >= REFRESH_EVERY:
            rebuilt = _build_tableau(A, b, cost, basis)
            if rebuilt is not None:
                tableau, since_refresh = rebuilt, 0
        value = tableau[m, ncols]
        if value > last_value - 1e-12:
            stall += 1
        else:
            stall = 0
        last_value = value


def _expand_free_variables(problem: LpProblem):
    """Split free variables into plus/minus columns; return the column map."""
    bounds = problem.bounds or [NONNEG] * problem.num_variables
    col_of: list[tuple[int, int | None]] = []  # var -> (plus column, minus column)
    ncols = 0
    for b in bounds:
        if b == FREE:
            col_of.append((ncols, ncols + 1))
            ncols += 2
        else:
            col_of.append((ncols, None))
            ncols += 1
    return col_of, ncols


def solve_lp(
    problem: LpProblem,
    tol: float = FEASIBILITY_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> LpSolution:
    """Two-phase simplex.  Returns status optimal/infeasible/unbounded.

    Optimal solutions satisfy every row within RESIDUAL_TOLERANCE (verified).
    Raises SimplexIterationLimit if the pivot budget runs out.
    """
    col_of, nstruct = _expand_free_variables(problem)
    nrows = len(problem.rows)

    # rows in equality standard form with non-negative rhs; >= rows with a
    # zero rhs flip to <= so their slack can seed the basis
    senses = []
    dense = np.zeros((nrows, nstruct))
    rhs = np.zeros(nrows)
    for r, row in enumerate(problem.rows):
        sense, b = row.sense, row.rhs
        sign = 1.0
        if b < 0 or (b == 0 and sense == GREATER):
            sign = -1.0
            b = -b
            sense = {LESS: GREATER, GREATER: LESS, EQUAL: EQUAL}[sense]
        for i, v in row.coeffs:
            plus, minus = col_of[i]
            dense[r, plus] += sign * v
            if minus is not None:
                dense[r, minus] -= sign * v
        rhs[r] = b
        senses.append(sense)

    n_slack = sum(1 for s in senses if s in (LESS, GREATER))
    n_art = sum(1 for s in senses if s in (EQUAL, GREATER))
    ncols = nstruct + n_slack + n_art
    A = np.zeros((nrows, ncols))
    A[:, :nstruct] = dense
    basis = [-1] * nrows
    slack_at = nstruct
    art_at = nstruct + n_slack
    art_cols = []
    for r, sense in enumerate(senses):
        if sense == LESS:
            A[r, slack_at] = 1.0
            basis[r] = slack_at
            slack_at += 1
        else:
            if sense == GREATER:
                A[r, slack_at] = -1.0
                slack_at += 1
            A[r, art_at] = 1.0
            basis[r] = art_at
            art_cols.append(art_at)
            art_at += 1

    budget = [0]

    # phase 1: minimize the sum of artificials
    cost1 = np.zeros(ncols)
    cost1[art_cols] = 1.0
    status, tableau = _run_simplex(A, rhs, cost1, basis, tol, max_iterations, budget)
    assert status == "optimal", "phase 1 is always bounded"
    if -tableau[nrows, ncols] > 1e-7:
        return LpSolution(status="infeasible", objective_value=None, x=None)

    # drive leftover artificials out of the basis (largest real pivot) or
    # drop their rows as redundant
    art_set = set(art_cols)
    real_cols = nstruct + n_slack
    keep_rows = []
    for r in range(nrows):
        if basis[r] in art_set:
            segment = np.abs(tableau[r, :real_cols])
            pivot_col = int(segment.argmax())
            if segment[pivot_col] <= tol:
                continue  # redundant constraint
            _pivot(tableau, basis, r, pivot_col)
        keep_rows.append(r)

    # phase 2: minimize the negated objective over the reduced original data
    A2 = A[np.array(keep_rows, dtype=int)][:, :real_cols]
    b2 = rhs[np.array(keep_rows, dtype=int)]
    basis2 = [basis[r] for r in keep_rows]
    cost2 = np.zeros(real_cols)
    for i, c in enumerate(problem.objective):
        plus, minus = col_of[i]
        cost2[plus] = -c
        if minus is not None:
            cost2[minus] = c

    status, tab2 = _run_simplex(A2, b2, cost2, basis2, tol, max_iterations, budget)
    if status == "unbounded":
        return LpSolution(status="unbounded", objective_value=None, x=None)

    m2 = len(keep_rows)
    x_cols = np.zeros(real_cols)
    for r in range(m2):
        x_cols[basis2[r]] = tab2[r, real_cols]
    x = np.zeros(problem.num_variables)
    for i in range(problem.num_variables):
        plus, minus = col_of[i]
        x[i] = x_cols[plus] - (x_cols[minus] if minus is not None else 0.0)
    value = float(np.dot(problem.objective, x))

    _certify(problem, x)
    return LpSolution(status="optimal", objective_value=value, x=x)


def _certify(problem: LpProblem, x: np.ndarray) -> None:
    bounds = problem.bounds or [NONNEG] * problem.num_variables
    for i, b in enumerate(bounds):
        if b == NONNEG and x[i] < -RESIDUAL_TOLERANCE:
            raise AssertionError(f"certification failed: x[{i}] = {x[i]:.3g} < 0")
    for r, row in enumerate(problem.rows):
        lhs = sum(v * x[i] for i, v in row.coeffs)
        resid = lhs - row.rhs
        ok = (
            (row.sense == LESS and resid <= RESIDUAL_TOLERANCE)
            or (row.sense == GREATER and resid >= -RESIDUAL_TOLERANCE)
            or (row.sense == EQUAL and abs(resid) <= RESIDUAL_TOLERANCE)
        )
        if not ok:
            raise AssertionError(
                f"certification failed: row {r} ({row.sense} {row.rhs}) residual {resid:.3g}"
            )
