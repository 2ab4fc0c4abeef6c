"""Spectral solver and structural auditor for backward stochastic evolution
equations.

The heavy lifting lives in the compiled ``_core`` extension; this package
re-exports its operations under their public names.
"""

from ._core import (
    __version__,
    check_operator,
    config_roundtrip,
    gn_ratio,
    run_check,
    run_converge,
    run_solve,
    solve_summary,
)

__all__ = [
    "__version__",
    "check_operator",
    "config_roundtrip",
    "gn_ratio",
    "run_check",
    "run_converge",
    "run_solve",
    "solve_summary",
]
