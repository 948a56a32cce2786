"""
CSV readers and writers for the command-line tools.

Samples file::

    index,x1[,x2,...],y[,clean_f]

Denoise output is ``index,r_hat,x1[,x2,...]`` and unwrap output is
``index,f_hat``. Floats are written with 17 significant digits so files
round-trip exactly.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from solver.angular import Mod1Samples
from solver.errors import InvalidSpecError, ParseError

logger = logging.getLogger(__name__)

_COORD = re.compile(r"^x(\d+)$")


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


@dataclass(frozen=True, eq=False)
class SampleTable:
    coords: np.ndarray  # (n, d)
    y: np.ndarray
    clean_f: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    @property
    def residues(self) -> Mod1Samples:
        return Mod1Samples(self.y)


def _open_rows(path: Path):
    try:
        f = open(path, "r", newline="")
    except OSError as e:
        raise ParseError(str(path), None, f"cannot open ({e.strerror})") from e
    return f


def _read_table(path: str | Path) -> tuple[List[str], np.ndarray]:
    """Header and an (rows, cols) float array; the index column must be 0..n-1."""
    path = Path(path)
    with _open_rows(path) as f:
        reader = csv.reader(f)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(str(path), None, "empty file") from None
        if not header or header[0] != "index":
            raise ParseError(str(path), 1, "first column must be 'index'")
        rows: List[List[float]] = []
        for row in reader:
            lineno = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(str(path), lineno, f"expected {len(header)} fields, found {len(row)}")
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                raise ParseError(str(path), lineno, f"non-numeric field in {row!r}") from None
            if values[0] != len(rows):
                raise ParseError(str(path), lineno, f"index {row[0]} out of sequence (expected {len(rows)})")
            rows.append(values)
    if not rows:
        raise ParseError(str(path), None, "no data rows")
    return header, np.asarray(rows, dtype=np.float64)


def _check_finite(path: str | Path, name: str, column: np.ndarray):
    bad = np.flatnonzero(~np.isfinite(column))
    if bad.size:
        raise ParseError(str(path), int(bad[0]) + 2, f"non-finite {name}")


def _check_residues(path: str | Path, name: str, column: np.ndarray):
    _check_finite(path, name, column)
    bad = np.flatnonzero((column < 0.0) | (column >= 1.0))
    if bad.size:
        raise ParseError(str(path), int(bad[0]) + 2, f"{name}={column[bad[0]]!r} outside [0, 1)")


# ---------------------------------------------------------------------------
# Samples
# ---------------------------------------------------------------------------


def read_samples(path: str | Path) -> SampleTable:
    header, data = _read_table(path)
    coord_cols = [i for i, h in enumerate(header) if _COORD.match(h)]
    expected = [f"x{j + 1}" for j in range(len(coord_cols))]
    if [header[i] for i in coord_cols] != expected or coord_cols != list(range(1, len(coord_cols) + 1)):
        raise ParseError(str(path), 1, "coordinate columns must be x1, x2, ... directly after index")
    if not coord_cols:
        raise ParseError(str(path), 1, "no coordinate columns")
    if "y" not in header:
        raise ParseError(str(path), 1, "missing 'y' column")
    y = data[:, header.index("y")]
    _check_residues(path, "y", y)
    clean = None
    if "clean_f" in header:
        clean = data[:, header.index("clean_f")]
        _check_finite(path, "clean_f", clean)
    coords = data[:, coord_cols]
    logger.debug("read %d samples (d=%d) from %s", y.shape[0], coords.shape[1], path)
    return SampleTable(coords=coords, y=y, clean_f=clean)


def write_samples(path: str | Path, table: SampleTable, blind: bool = False) -> None:
    d = table.d
    with_clean = table.clean_f is not None and not blind
    header = ["index"] + [f"x{j + 1}" for j in range(d)] + ["y"] + (["clean_f"] if with_clean else [])
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for i in range(table.n):
            row = [str(i)] + [format_value(c) for c in table.coords[i]] + [format_value(table.y[i])]
            if with_clean:
                row.append(format_value(table.clean_f[i]))
            writer.writerow(row)


# ---------------------------------------------------------------------------
# Outputs
# ---------------------------------------------------------------------------


def write_column(path: str | Path, name: str, values: np.ndarray) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["index", name])
        for i, v in enumerate(np.asarray(values, dtype=np.float64)):
            writer.writerow([str(i), format_value(v)])


def read_column(path: str | Path, name: str) -> np.ndarray:
    header, data = _read_table(path)
    if name not in header:
        raise ParseError(str(path), 1, f"missing {name!r} column")
    column = data[:, header.index(name)]
    _check_finite(path, name, column)
    return column


def write_residues(path: str | Path, values: np.ndarray, coords: np.ndarray) -> None:
    """Denoise output ``index,r_hat,x1[,x2,...]``; the coordinates let ``unwrap`` rebuild the grid."""
    coords = np.asarray(coords, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[0] != values.shape[0]:
        raise InvalidSpecError(f"coordinates of shape {coords.shape} do not match {values.shape[0]} residues")
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["index", "r_hat"] + [f"x{j + 1}" for j in range(coords.shape[1])])
        for i, v in enumerate(values):
            writer.writerow([str(i), format_value(v)] + [format_value(c) for c in coords[i]])


def read_residues(path: str | Path) -> tuple[Mod1Samples, Optional[int]]:
    """Residues from either a samples file (column ``y``) or a denoise output (``r_hat``).

    The second element is the dimension when the file carries coordinates.
    """
    header, data = _read_table(path)
    if "r_hat" in header:
        r = data[:, header.index("r_hat")]
        _check_residues(path, "r_hat", r)
        coords = sorted(int(m.group(1)) for m in map(_COORD.match, header) if m)
        if coords != list(range(1, len(coords) + 1)):
            raise ParseError(str(path), 1, "coordinate columns must be x1, x2, ...")
        return Mod1Samples(r), len(coords) or None
    table = read_samples(path)
    return table.residues, table.d


# ---------------------------------------------------------------------------
# Tables of records
# ---------------------------------------------------------------------------


def write_records(path: str | Path, fieldnames: Sequence[str], rows: Iterable[Dict[str, Any]]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(list(fieldnames))
        for row in rows:
            unknown = set(row) - set(fieldnames)
            if unknown:
                raise InvalidSpecError(f"unexpected columns {sorted(unknown)}")
            writer.writerow([format_value(row.get(name)) for name in fieldnames])
