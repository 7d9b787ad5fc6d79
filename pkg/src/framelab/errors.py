"""Exception hierarchy.

Every error carries a machine-readable ``kind`` string. The CLI maps kinds to
exit codes: input/parse problems exit with 1, failed hypotheses or
preconditions exit with 2.
"""


class FramelabError(Exception):
    kind = "error"
    exit_code = 2

    def to_dict(self):
        return {"kind": self.kind, "message": str(self)}


class InputError(FramelabError):
    kind = "input_error"
    exit_code = 1


class FrameFormatError(InputError):
    """Frame file could not be parsed. ``location`` names the offending line or field."""

    kind = "parse_error"

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)

    def to_dict(self):
        d = super().to_dict()
        d["location"] = self.location
        return d


class InvariantViolation(InputError):
    kind = "invariant_violation"

    def __init__(self, invariant, message):
        self.invariant = invariant
        super().__init__(f"[{invariant}] {message}")

    def to_dict(self):
        d = super().to_dict()
        d["invariant"] = self.invariant
        return d


class DimensionMismatch(FramelabError):
    kind = "dimension_mismatch"


class FieldMismatch(FramelabError):
    kind = "field_mismatch"


class DegeneratePair(FramelabError):
    kind = "degenerate_pair"


class NotAFrame(FramelabError):
    kind = "not_a_frame"


class FieldUnsupported(FramelabError):
    kind = "field_unsupported"


class TooLarge(FramelabError):
    kind = "too_large"


class DegenerateWitness(FramelabError):
    kind = "degenerate_witness"


class ZeroVector(FramelabError):
    kind = "zero_vector"


class RadiusExceeded(FramelabError):
    kind = "radius_exceeded"


class HypothesisFail(FramelabError):
    kind = "hypothesis_fail"


class NotABasis(FramelabError):
    kind = "not_a_basis"


class RegimeExceeded(FramelabError):
    kind = "regime_exceeded"

    def __init__(self, message, alpha_cutoff=None):
        self.alpha_cutoff = alpha_cutoff
        super().__init__(message)


class ZeroCoefficient(FramelabError):
    kind = "zero_coefficient"


class OverlappingBlocks(FramelabError):
    kind = "overlapping_blocks"


class ConstructionFailed(FramelabError):
    kind = "construction_failed"

    def __init__(self, message, margins=None):
        self.margins = margins
        super().__init__(message)


class PreconditionError(FramelabError):
    kind = "precondition"
