"""Published reference values of unit-weight coefficients and minimal orders.

Each coefficient table is keyed by its fixed leading subscripts; rows
and columns index the remaining two subscripts in written order, so
``TABLE_3JK[j][k]`` is ``cbar(3, j, k)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as F

from .coefficients import cbar

__all__ = ["REFERENCE_TABLES", "ReferenceTable", "TableMismatch", "verify_tables", "MIN_Q_REFERENCE"]


@dataclass(frozen=True)
class ReferenceTable:
    name: str
    prefix: tuple[int, ...]
    cells: tuple[tuple[F, ...], ...]

    def entries(self):
        """``(subscript, value)`` for every cell, subscripts in written order."""
        for a, row in enumerate(self.cells):
            for b, value in enumerate(row):
                yield self.prefix + (a, b), value


@dataclass(frozen=True)
class TableMismatch:
    table: str
    subscript: tuple[int, ...]
    expected: F
    computed: F


TABLE_3JK = ReferenceTable(
    "2",
    (3,),
    (
        (F(0), F(2, 105), F(0), F(-4, 315), F(0), F(2, 693), F(0)),
        (F(4, 105), F(0), F(-2, 315), F(0), F(-8, 3465), F(0), F(10, 9009)),
        (F(2, 35), F(-2, 105), F(0), F(4, 3465), F(0), F(-74, 45045), F(0)),
        (F(2, 315), F(0), F(-2, 3465), F(0), F(16, 45045), F(0), F(-10, 9009)),
        (F(-2, 63), F(46, 3465), F(0), F(-32, 45045), F(0), F(2, 9009), F(0)),
        (F(-10, 693), F(0), F(38, 9009), F(0), F(-4, 9009), F(0), F(122, 765765)),
        (F(0), F(-10, 3003), F(0), F(20, 9009), F(0), F(-226, 765765), F(0)),
    ),
)

TABLE_21KL = ReferenceTable(
    "3",
    (2, 1),
    (
        (F(2, 21), F(-2, 45), F(2, 315)),
        (F(2, 315), F(2, 315), F(-2, 225)),
        (F(-2, 105), F(2, 225), F(2, 1155)),
    ),
)

TABLE_101LR = ReferenceTable(
    "4",
    (1, 0, 1),
    (
        (F(4, 315), F(0)),
        (F(4, 315), F(-8, 945)),
    ),
)

REFERENCE_TABLES = (TABLE_3JK, TABLE_21KL, TABLE_101LR)

# interval length -> (q for k=2, q1 for k=3)
MIN_Q_REFERENCE = {
    "0.08222": (19, 1),
    "0.05020": (51, 2),
    "0.02310": (235, 5),
    "0.01956": (328, 6),
}


def verify_tables(tables=REFERENCE_TABLES) -> list[TableMismatch]:
    """Exact comparison of every cell; an empty list means all match."""
    out = []
    for table in tables:
        for sub, expected in table.entries():
            got = cbar(sub)
            if got != expected:
                out.append(TableMismatch(table.name, sub, expected, got))
    return out
