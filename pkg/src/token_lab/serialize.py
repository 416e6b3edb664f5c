"""CSV/JSON output helpers.

All numeric CSV fields are printed with 12 significant digits, dot decimal
separator and "\n" line endings, independent of locale, so repeated runs of
any command are byte-identical.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Sequence


def fmt(x) -> str:
    """Format one CSV field: ints verbatim, floats to 12 significant digits."""
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".12g")


def csv_lines(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"
