"""
Plain-text elevation grids.

Format::

    rows cols
    v00 v01 ... v0(cols-1)
    v10 ...

Values are whitespace separated and read row-major; line breaks inside the
value block are free. Only square grids are accepted by the pipeline.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from solver.errors import ParseError

logger = logging.getLogger(__name__)


def read_grid(path: str | Path) -> np.ndarray:
    """Read a ``rows x cols`` float grid. Errors carry the offending line number."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(str(path), None, f"cannot read grid file ({e.strerror})") from e
    lines = text.splitlines()
    header_line = next((i for i, ln in enumerate(lines) if ln.strip()), None)
    if header_line is None:
        raise ParseError(str(path), None, "empty grid file")
    header = lines[header_line].split()
    try:
        rows, cols = (int(tok) for tok in header)
    except ValueError:
        raise ParseError(str(path), header_line + 1, "header must be 'rows cols'") from None
    if rows < 1 or cols < 1:
        raise ParseError(str(path), header_line + 1, f"invalid grid size {rows}x{cols}")

    values: list[float] = []
    for lineno, line in enumerate(lines[header_line + 1 :], start=header_line + 2):
        for tok in line.split():
            try:
                values.append(float(tok))
            except ValueError:
                raise ParseError(str(path), lineno, f"not a number: {tok!r}") from None
    if len(values) != rows * cols:
        raise ParseError(str(path), len(lines), f"expected {rows * cols} values, found {len(values)}")
    grid = np.asarray(values, dtype=np.float64).reshape(rows, cols)
    if not np.all(np.isfinite(grid)):
        raise ParseError(str(path), None, "grid contains non-finite values")
    logger.debug("read %dx%d grid from %s", rows, cols, path)
    return grid


def write_grid(path: str | Path, grid: np.ndarray) -> None:
    grid = np.atleast_2d(np.asarray(grid, dtype=np.float64))
    rows, cols = grid.shape
    with open(path, "w") as f:
        f.write(f"{rows} {cols}\n")
        for row in grid:
            f.write(" ".join(f"{v:.17g}" for v in row) + "\n")
