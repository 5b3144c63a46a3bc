"""Gaussian elimination over the rationals with arbitrary right-hand sides.

The matrix is rational; right-hand-side entries only need ``+``, ``-``,
multiplication by a :class:`~fractions.Fraction`, and truthiness for zero
(Fractions and :class:`~jetvar.symkernel.Expr` both qualify).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Hashable, Mapping, Sequence, TypeVar

T = TypeVar("T")


def solve(rows: Sequence[Mapping[Hashable, Fraction]], rhs: Sequence[T]) -> dict[Hashable, T] | None:
    """Solve ``sum_c rows[r][c] * x[c] = rhs[r]``.

    Returns one particular solution (free unknowns set to zero) as a dict over
    the unknowns that appear, or ``None`` if the system is inconsistent.
    """
    pending = [(dict(r), b) for r, b in zip(rows, rhs)]
    pivots: list[tuple[Hashable, dict, T]] = []
    while pending:
        row, b = pending.pop()
        # eliminate existing pivots from this row
        for col, prow, pb in pivots:
            f = row.get(col)
            if f:
                for c, v in prow.items():
                    nv = row.get(c, 0) - f * v
                    if nv:
                        row[c] = nv
                    else:
                        row.pop(c, None)
                b = b - pb * f
        if not row:
            if b:
                return None
            continue
        col = min(row, key=_col_key)
        inv = 1 / Fraction(row[col])
        row = {c: v * inv for c, v in row.items()}
        b = b * inv
        # back-substitute into earlier pivots to keep them reduced
        new_pivots = []
        for pcol, prow, pb in pivots:
            f = prow.get(col)
            if f:
                for c, v in row.items():
                    nv = prow.get(c, 0) - f * v
                    if nv:
                        prow[c] = nv
                    else:
                        prow.pop(c, None)
                pb = pb - b * f
            new_pivots.append((pcol, prow, pb))
        pivots = new_pivots
        pivots.append((col, row, b))
    return {col: b for col, _, b in pivots}


def _col_key(c):
    return repr(c)
