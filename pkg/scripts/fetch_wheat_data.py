#!/usr/bin/env python3
"""Fetch the wheat-yields uniformity grid and convert it for this package.

Downloads the ``iyer.wheat.uniformity`` table (grain yields of an
agricultural uniformity trial, reported in half-ounce units on a 25 x 80
field of 5 ft x 5 ft plots) from the Rdatasets CSV mirror of the R
package ``agridat``, pivots the long (row, col, yield) records into the
25 x 80 count grid, validates it against known fingerprints of the data,
and writes ``data/wheat_yields.csv`` in this package's grid format
(headerless integer CSV, rows = s ascending, columns = t ascending).

Validation: the written grid must be 25 x 80, all integers, with sample
mean 33.8425 (exact to 4 decimals) and dispersion index about 1.129.
The script prints the SHA-256 of the written file; pass
``--expected-sha256`` to additionally pin it.  If a fit to this grid
later misses its expected values, check the pivot orientation against the
original table before suspecting the estimators.

Usage:
    python3 scripts/fetch_wheat_data.py [--url URL] [--out data/wheat_yields.csv]
"""

import argparse
import csv
import hashlib
import io
import sys
import urllib.request
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from cinar import CountGrid, read_grid, write_grid  # noqa: E402

PRIMARY_URL = ("https://vincentarelbundock.github.io/Rdatasets/csv/"
               "agridat/iyer.wheat.uniformity.csv")
EXPECTED_SHAPE = (25, 80)
EXPECTED_MEAN = 33.8425
EXPECTED_DISPERSION = 1.129


def fetch_long_table(url):
    """Download the long-format CSV and return (row, col, yield) triples."""
    with urllib.request.urlopen(url, timeout=60) as response:
        text = response.read().decode("utf-8")
    reader = csv.DictReader(io.StringIO(text))
    triples = []
    for record in reader:
        triples.append((int(record["row"]), int(record["col"]),
                        float(record["yield"])))
    if not triples:
        raise SystemExit(f"no records parsed from {url}")
    return triples


def pivot(triples):
    """Long (row, col, yield) -> 25 x 80 integer grid, transposing if needed."""
    n_rows = max(r for r, _, _ in triples)
    n_cols = max(c for _, c, _ in triples)
    values = np.full((n_rows, n_cols), -1.0)
    for r, c, y in triples:
        values[r - 1, c - 1] = y
    if np.any(values < 0):
        raise SystemExit("pivot left holes: not a complete rectangular table")
    if values.shape == EXPECTED_SHAPE[::-1]:
        values = values.T
    if values.shape != EXPECTED_SHAPE:
        raise SystemExit(
            f"unexpected table shape {values.shape}, wanted {EXPECTED_SHAPE}"
        )
    if not np.all(values == np.round(values)):
        raise SystemExit("yields are not integers (half-ounce counts expected)")
    return values.astype(np.int64)


def validate(values):
    mean = float(values.mean())
    dispersion = float(values.var() / values.mean())
    if abs(mean - EXPECTED_MEAN) > 5e-5:
        raise SystemExit(
            f"sample mean {mean:.4f} != expected {EXPECTED_MEAN} — wrong data?"
        )
    if abs(dispersion - EXPECTED_DISPERSION) > 0.01:
        raise SystemExit(
            f"dispersion index {dispersion:.3f} != expected"
            f" {EXPECTED_DISPERSION} — wrong data?"
        )
    return mean, dispersion


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--url", default=PRIMARY_URL)
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent
                                             .parent / "data"
                                             / "wheat_yields.csv"))
    parser.add_argument("--expected-sha256", default=None,
                        help="pin the SHA-256 of the written grid file")
    args = parser.parse_args(argv)

    print(f"fetching {args.url} ...")
    values = pivot(fetch_long_table(args.url))
    mean, dispersion = validate(values)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_grid(CountGrid(values), out)
    back = read_grid(out)
    assert np.array_equal(back.values, values)

    digest = hashlib.sha256(out.read_bytes()).hexdigest()
    print(f"wrote {out}: shape {values.shape}, mean {mean:.4f},"
          f" dispersion {dispersion:.3f}")
    print(f"sha256 {digest}")
    if args.expected_sha256 and digest != args.expected_sha256:
        raise SystemExit("sha256 mismatch — data differs from the pinned copy")
    return 0


if __name__ == "__main__":
    sys.exit(main())
