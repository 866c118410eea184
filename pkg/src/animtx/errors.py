"""Exception hierarchy shared by every stage of the compiler."""

from __future__ import annotations


class AnimtxError(Exception):
    """Base class for all errors raised by this package."""


class DocumentError(AnimtxError):
    """A chart, transition or plan document could not be read.

    ``offset`` is a byte offset into the UTF-8 encoded document when the
    failure can be localised (syntax errors), otherwise ``None``.
    """

    def __init__(self, message: str, offset: int | None = None, path: str | None = None):
        self.offset = offset
        self.path = path
        where = []
        if path:
            where.append(path)
        if offset is not None:
            where.append(f"byte {offset}")
        prefix = f"{': '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ChartError(AnimtxError):
    """A chart document violates the chart model's invariants."""


class ScaleOverflow(AnimtxError):
    """A value fell outside a scale's domain where that is not allowed."""


class TransformError(AnimtxError):
    """A dataset transform referenced an unknown field or bad operand."""


class GrammarError(AnimtxError):
    """A transition document violates the grammar's invariants."""


class ScheduleError(AnimtxError):
    """A timeline could not be resolved into absolute times."""


class JoinError(AnimtxError):
    """Keyed data join failed (duplicate or unmatched keys)."""


class ThreadingError(AnimtxError):
    """Per-step component states could not be derived."""


class CompileError(AnimtxError):
    """Plan compilation failed after validation passed."""


class ValidationFailed(AnimtxError):
    """Raised when a transition has diagnostics and cannot be compiled."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        lines = "; ".join(str(d) for d in self.diagnostics)
        super().__init__(f"{len(self.diagnostics)} diagnostic(s): {lines}")


class RecommendError(AnimtxError):
    """The recommender could not produce any candidate."""
