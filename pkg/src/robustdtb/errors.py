"""Exception hierarchy.

Numerical failures carry enough context (block index, Lanczos step,
pipeline step) to tell the user which knob to turn.
"""

from __future__ import annotations


class DtbError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(DtbError, ValueError):
    pass


class ConfigurationError(DtbError, ValueError):
    pass


class GeometryError(DtbError, ValueError):
    pass


class ConvergenceError(DtbError):
    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class BreakdownError(DtbError):
    """A pivot block of a block Cholesky factorization is not positive definite."""

    def __init__(self, block_index: int, message: str = ""):
        text = f"pivot block {block_index} is not positive definite"
        if message:
            text = f"{text}: {message}"
        super().__init__(text)
        self.block_index = block_index


class DeflationError(DtbError):
    """Block Lanczos produced a numerically rank-deficient block."""

    def __init__(self, step: int, norm: float = float("nan")):
        super().__init__(
            f"block Lanczos deflated at step {step} (smallest pivot {norm:.3e}); "
            "reduce the truncation rank"
        )
        self.step = step
        self.norm = norm


class IndefiniteGramian(DtbError):
    """The data Gramian is not positive definite; use the regularized path."""

    def __init__(self, block_index: int = -1, message: str = ""):
        text = "data Gramian is indefinite"
        if block_index >= 0:
            text += f" (Cholesky breakdown at block {block_index})"
        if message:
            text += f": {message}"
        super().__init__(text + "; use the regularized (truncated) transform")
        self.block_index = block_index


class TruncationError(DtbError, ValueError):
    pass


class StabilityError(DtbError):
    def __init__(self, message: str, suggested_substeps: int):
        super().__init__(f"{message}; try substeps >= {suggested_substeps}")
        self.suggested_substeps = suggested_substeps


class PipelineError(DtbError):
    """Failure inside the DtB transform, tagged with the algorithm step (1-7)."""

    def __init__(self, step: int, cause: Exception):
        super().__init__(f"step {step}: {type(cause).__name__}: {cause}")
        self.step = step
        self.cause = cause
