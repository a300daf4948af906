"""Continuum Kac-Moody algebras and quantum groups on the line and the circle.

Modules:

* ``intervals``: intervals, characteristic functions, the Euler form and the
  structure coefficients.
* ``scalars``: Laurent polynomials in q^(1/2) and truncated hbar series.
* ``freealg``: noncommutative polynomials, tensors and bounded rewriting.
* ``lie``: the classical Lie algebra, its bialgebra structure and colimits.
* ``qgroup``: the quantum group, its Hopf structure, pairing and R-matrix.
* ``cli``: the ``contqg`` command.
"""

from .errors import ContQGError
from .intervals import (
    FULL_CIRCLE, CharFun, Interval, RelativePosition, VertexSpace, arc, classify, close_grid,
    euler_form, half_form, line, parse_interval, uniform_grid, arcs_grid,
)
from .reports import QReport, Report
from .scalars import HbarSeries, LaurentV, q

__version__ = "0.1.0"

__all__ = [
    "ContQGError", "FULL_CIRCLE", "CharFun", "Interval", "RelativePosition", "VertexSpace",
    "arc", "classify", "close_grid", "euler_form", "half_form", "line", "parse_interval",
    "uniform_grid", "arcs_grid", "QReport", "Report", "HbarSeries", "LaurentV", "q",
]
