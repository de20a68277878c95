from __future__ import annotations

import json
from decimal import ROUND_HALF_UP, Decimal


def round_half_up(x: float) -> int:
    # via a decimal string so 4.75 is not seen as 4.7499999...
    return int(Decimal(repr(round(x, 9))).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def clamp(x, lo, hi):
    return max(lo, min(hi, x))


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
