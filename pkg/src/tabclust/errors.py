"""Exception types raised across the package.

Every error carries a short machine-readable ``code`` so the command line
front end can report failures in a parseable form.
"""


class TabclustError(ValueError):
    code = "error"


class NotSquare(TabclustError):
    code = "not_square"


class NotSymmetric(TabclustError):
    code = "not_symmetric"


class NotPositiveDefinite(TabclustError):
    code = "not_positive_definite"


class DimensionMismatch(TabclustError):
    code = "dimension_mismatch"


class ShapeMismatch(TabclustError):
    code = "shape_mismatch"


class NonFiniteValue(TabclustError):
    code = "non_finite_value"


class NonFiniteLoss(TabclustError):
    code = "non_finite_loss"


class NonFinite(TabclustError):
    code = "non_finite"


class InsufficientSubclusters(TabclustError):
    code = "insufficient_subclusters"


class InvalidDelta(TabclustError):
    code = "invalid_delta"


class ZeroVector(TabclustError):
    code = "zero_vector"


class DegenerateColumn(TabclustError):
    code = "degenerate_column"


class LengthMismatch(TabclustError):
    code = "length_mismatch"


class RaggedRows(TabclustError):
    code = "ragged_rows"


class NonNumericCell(TabclustError):
    code = "non_numeric_cell"


class NegativeLabel(TabclustError):
    code = "negative_label"


class NonIntegerLine(TabclustError):
    code = "non_integer_line"


class EmptyInput(TabclustError):
    code = "empty_input"


class InsufficientData(TabclustError):
    code = "insufficient_data"


class InvalidConfig(TabclustError):
    code = "invalid_config"
