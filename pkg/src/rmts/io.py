"""Series CSV files and JSON-friendly conversion helpers.

CSV layout: a header ``t,x1,...,xk`` (complex: ``t,x1_re,x1_im,...``), then
one row per timestamp with ``t = 0, 1, 2, ...`` and no gaps.  Numbers are
written with 17 significant digits, so finite doubles round-trip exactly.
"""

import csv
import io as _io
import math

import numpy as np

from .errors import SeriesParseError
from .model import SeriesData


def series_header(k, complex_field=False):
    if complex_field:
        cols = [f"x{i + 1}_{part}" for i in range(k) for part in ("re", "im")]
    else:
        cols = [f"x{i + 1}" for i in range(k)]
    return ["t"] + cols


def _fmt(v):
    return format(float(v), ".17g")


def format_series_csv(series):
    values = series.values
    k = values.shape[1]
    cplx = np.iscomplexobj(values)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(series_header(k, cplx))
    for t, row in enumerate(values):
        if cplx:
            cells = [c for z in row for c in (_fmt(z.real), _fmt(z.imag))]
        else:
            cells = [_fmt(v) for v in row]
        w.writerow([str(t)] + cells)
    return buf.getvalue()


def write_series(series, path):
    with open(path, "w", newline="") as fh:
        fh.write(format_series_csv(series))


def parse_series_csv(text):
    """Parse series CSV text.

    Raises:
        SeriesParseError: bad header, ragged or non-numeric rows, a gap in
            ``t``, or fewer than two rows.  Messages carry the line number.
    """
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or not any(cell.strip() for cell in rows[0]):
        raise SeriesParseError("empty file: a header and at least two rows are required")
    header = [c.strip() for c in rows[0]]
    ncols = len(header) - 1
    if ncols < 1 or header[0] != "t":
        raise SeriesParseError("header must start with 't' followed by component columns", line=1)
    cplx = header[1].endswith("_re")
    if cplx:
        if ncols % 2:
            raise SeriesParseError("complex header needs _re/_im column pairs", line=1)
        expected = series_header(ncols // 2, True)
    else:
        expected = series_header(ncols, False)
    if header != expected:
        raise SeriesParseError(f"header {header} does not match expected {expected}", line=1)

    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise SeriesParseError(f"expected {len(header)} cells, found {len(row)}", line=lineno)
        try:
            t = int(row[0])
            nums = [float(c) for c in row[1:]]
        except ValueError as exc:
            raise SeriesParseError(f"non-numeric cell ({exc})", line=lineno) from None
        if t != len(data):
            raise SeriesParseError(f"expected t={len(data)}, found t={t}", line=lineno)
        if not all(math.isfinite(v) for v in nums):
            raise SeriesParseError("non-finite value", line=lineno)
        data.append(nums)
    if len(data) < 2:
        raise SeriesParseError(f"series needs at least two rows, found {len(data)}")
    arr = np.array(data, dtype=np.float64)
    if cplx:
        arr = arr[:, 0::2] + 1j * arr[:, 1::2]
    return SeriesData(arr)


def read_series(path):
    with open(path, newline="") as fh:
        return parse_series_csv(fh.read())


def to_jsonable(value):
    """Numbers, arrays and containers to JSON types.

    Complex numbers become ``[re, im]`` and non-finite floats become None.
    """
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()] if value.ndim else to_jsonable(value.item())
    if isinstance(value, (complex, np.complexfloating)):
        return [to_jsonable(float(value.real)), to_jsonable(float(value.imag))]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, int):
        return value
    if isinstance(value, (float, np.floating)):
        # JSON has no NaN or infinity
        return float(value) if math.isfinite(value) else None
    return value


def flatten_report(report, prefix=""):
    """Flatten nested report data to ``(dotted.key, value)`` rows for CSV output."""
    rows = []
    if isinstance(report, dict):
        for k, v in report.items():
            rows.extend(flatten_report(v, f"{prefix}.{k}" if prefix else str(k)))
    elif isinstance(report, list):
        for i, v in enumerate(report):
            rows.extend(flatten_report(v, f"{prefix}[{i}]"))
    else:
        rows.append((prefix, report))
    return rows
