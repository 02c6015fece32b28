"""Shared exception types and message helpers."""

from decimal import Decimal


class ResourceLimitError(Exception):
    """Raised when a requested computation exceeds a configured budget.

    The message names the offending size so callers can shrink the request.
    CLI maps this to exit code 3.
    """


def format_count(count: int) -> str:
    """Render a (possibly astronomically large) integer count for messages.

    Counts like M^d * n can exceed the float range, so large values go
    through Decimal scientific notation instead of float formatting.
    """
    if count < 10 ** 15:
        return str(count)
    return f"{Decimal(count):.3e}"
