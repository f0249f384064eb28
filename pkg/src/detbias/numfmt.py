"""Fixed-point presentation of metric values."""

from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal


def fmt2(value: float) -> str:
    """Two decimals, half-up, from the shortest decimal repr of the
    float (so 82.7399999999 prints as 82.74, not 82.73)."""
    return str(Decimal(repr(float(value))).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_UP))
