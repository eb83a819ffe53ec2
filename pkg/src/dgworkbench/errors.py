"""One error type for the whole workbench, discriminated by machine-readable code.

Codes travel unchanged through the CLI (stderr JSON) and the HTTP API
(error body), so callers never parse prose.
"""

from __future__ import annotations

from typing import Any


class WorkbenchError(Exception):
    """Domain failure with a stable code and optional structured detail."""

    def __init__(self, code: str, message: str, **detail: Any):
        super().__init__(message)
        self.code = code
        self.message = message
        self.detail = {k: v for k, v in detail.items() if v is not None}

    def __repr__(self) -> str:  # pragma: no cover
        return f"WorkbenchError({self.code!r}, {self.message!r}, {self.detail!r})"

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"code": self.code, "message": self.message}
        if self.detail:
            out["detail"] = self.detail
        return out
