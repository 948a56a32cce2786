"""
Error metrics and correlation-bound checkers.
"""

from .bounds import BoundInputs, BoundKind, BoundReport, check_bound, holder_quadform_bound
from .metrics import ShiftAlignment, correlation, mod_out_shift, realized_delta, rmse, summarize, wrap_rmse

__all__ = [
    "BoundInputs",
    "BoundKind",
    "BoundReport",
    "check_bound",
    "holder_quadform_bound",
    "ShiftAlignment",
    "correlation",
    "mod_out_shift",
    "realized_delta",
    "rmse",
    "summarize",
    "wrap_rmse",
]
