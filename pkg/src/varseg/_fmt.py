"""CSV number formatting shared by all text dumps."""
import numpy as np


def g9(x) -> str:
    # 9 significant digits; normalize -0 so dumps are stable
    x = float(x)
    if x == 0.0:
        x = 0.0
    return f"{x:.9g}"


def csv_lines(header, rows) -> str:
    """Format rows; ``header=None`` writes data lines only."""
    out = [] if header is None else [header]
    for row in rows:
        out.append(",".join(str(v) if isinstance(v, (int, np.integer)) else g9(v) for v in row))
    return "\n".join(out) + "\n"


def parse_csv(text: str):
    """Return (header fields or None, float array of rows); blank lines ignored."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty CSV")
    first = [h.strip() for h in lines[0].split(",")]
    try:
        [float(v) for v in first]
        header = None
    except ValueError:
        header, lines = first, lines[1:]
    rows = [[float(v) for v in ln.split(",")] for ln in lines]
    if any(len(r) != len(first) for r in rows):
        raise ValueError("ragged CSV rows")
    return header, np.array(rows, dtype=float).reshape(len(rows), len(first))
