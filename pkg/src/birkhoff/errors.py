"""Error taxonomy.  Every failure mode carries a stable machine-readable code."""


class BirkhoffError(Exception):
    code = "error"

    def __init__(self, message=""):
        super().__init__(message or self.code)


class InvalidIsometry(BirkhoffError):
    code = "invalid-isometry"


class NoAxis(BirkhoffError):
    code = "no-axis"


class DegenerateInput(BirkhoffError):
    code = "degenerate-input"


class Infeasible(BirkhoffError):
    code = "infeasible"


class NoConvergence(BirkhoffError):
    code = "no-convergence"


class InvalidType(BirkhoffError):
    code = "invalid-type"


class NotSmallType(BirkhoffError):
    code = "not-small-type"


class UncoveredCase(BirkhoffError):
    code = "uncovered-case"


class NearSingular(BirkhoffError):
    code = "near-singular"


class ConstructionFailure(BirkhoffError):
    code = "construction-failure"


class GluingFailure(BirkhoffError):
    code = "gluing-failure"


class ClassificationFailure(BirkhoffError):
    code = "classification-failure"


class SamplingFailure(BirkhoffError):
    code = "sampling-failure"


class MappingFailure(BirkhoffError):
    code = "mapping-failure"


class ParseError(BirkhoffError):
    code = "parse-error"
