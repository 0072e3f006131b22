"""CSV reading/writing for count grids.

A grid file is plain CSV of non-negative integers: one row per spatial
row ``s`` (ascending), one column per ``t`` (ascending).  An optional
single header line can be skipped on read; ``write_grid`` never writes
one.  Rejections carry the offending file row/column (1-based, counting
any header line) so a bad cell in a large file can be found directly.
"""

import csv

import numpy as np

from .errors import ValidationError
from .model import CountGrid

__all__ = ["read_grid", "write_grid"]


def read_grid(path, header=False):
    """Read a CountGrid from a CSV file of non-negative integers.

    Raises ValidationError, naming the file position, for: a non-integer
    or negative cell, ragged rows, or an empty file.  ``header=True``
    skips the first line.
    """
    rows = []
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise ValidationError(f"cannot read grid file: {exc}") from None
    with handle as fh:
        for r, record in enumerate(csv.reader(fh)):
            if header and r == 0:
                continue
            if not record or all(cell.strip() == "" for cell in record):
                continue  # blank line (e.g. trailing newline)
            parsed = []
            for c, cell in enumerate(record):
                text = cell.strip()
                try:
                    value = int(text)
                except ValueError:
                    raise ValidationError(
                        f"{path}: non-integer cell {text!r} at row {r + 1},"
                        f" column {c + 1}"
                    ) from None
                if value < 0:
                    raise ValidationError(
                        f"{path}: negative count {value} at row {r + 1},"
                        f" column {c + 1}"
                    )
                parsed.append(value)
            rows.append((r, parsed))
    if not rows:
        raise ValidationError(f"{path}: empty grid file")
    width = len(rows[0][1])
    for r, parsed in rows:
        if len(parsed) != width:
            raise ValidationError(
                f"{path}: ragged rows — row {r + 1} has {len(parsed)} cells,"
                f" expected {width}"
            )
    return CountGrid(np.array([parsed for _, parsed in rows], dtype=np.int64))


def write_grid(grid, path):
    """Write a CountGrid as headerless integer CSV (read_grid round-trips)."""
    np.savetxt(path, grid.values, fmt="%d", delimiter=",")
