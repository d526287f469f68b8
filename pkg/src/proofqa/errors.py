"""Exception types shared across the package."""


class ProofQAError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ProofQAError):
    """Malformed statement or query text.

    ``offset`` is the byte offset of the offending token in the input string.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class InvalidTheory(ProofQAError):
    """Structurally broken theory (duplicate ids, lexical clashes, emptiness)."""


class StratificationError(ProofQAError):
    """An attribute negated in some rule body also occurs in a rule head."""


class DimensionMismatch(ProofQAError):
    """Array arguments disagree about the node count or pair count."""


class TooLarge(ProofQAError):
    """Exact enumeration was requested for an instance beyond the size cap."""


class MissingGold(ProofQAError):
    """A supervised operation needs gold labels the example does not carry."""


class EmptyTheory(ProofQAError):
    """An operation needs at least one statement."""


class EmptyDataset(ProofQAError):
    """An operation needs at least one example."""


class Infeasible(ProofQAError):
    """No edge set can satisfy the structural decoding constraints."""


class SchemaError(ProofQAError):
    """A serialized example violates the dataset schema.

    ``line`` is the 1-based line number in the file being read.
    """

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class LengthMismatch(ProofQAError):
    """Prediction and gold sequences have different lengths."""


class IdMismatch(ProofQAError):
    """Prediction and gold sequences are not aligned by example id."""


class ResampleExhausted(ProofQAError):
    """Rejection sampling failed to produce a valid example within the budget."""


class UsageError(ProofQAError):
    """Bad command-line arguments."""
