# src/hodse/rules.py
from enum import Enum, IntEnum


class FunctionalKind(Enum):
    POLYNOMIAL = "polynomial"
    SEPARABLE = "separable"
    CUSTOM = "custom"


class SeparableBase(Enum):
    ABS = "abs"
    POW = "pow"
    SQUARE = "square"
    SIN = "sin"
    TABLE = "table"

    @property
    def needs_smoothing(self) -> bool:
        return self in (SeparableBase.ABS, SeparableBase.POW)


class EstimatePath(Enum):
    DENSE = "dense"
    SEPARABLE = "separable"
    BOOTSTRAP = "bootstrap"
    JACKKNIFE = "jackknife"


class EstimatorName(Enum):
    PLUGIN = "plugin"
    HODSE = "hodse"
    BOOTSTRAP = "bootstrap"


class NoiseFamily(Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    UNIFORM = "uniform"
    SCALED_MIXTURE = "scaled-mixture"
    STUDENT_T = "student-t"

    @property
    def two_point(self) -> bool:
        return self is NoiseFamily.RADEMACHER

    @property
    def outside_theory(self) -> bool:
        return self is NoiseFamily.STUDENT_T


class NoiseCheckMethod(Enum):
    CLOSED_FORM = "closed-form"
    EXHAUSTIVE = "exhaustive"
    MONTE_CARLO = "monte-carlo"


class ThetaKind(Enum):
    ZEROS = "zeros"
    CONSTANT = "constant"
    UNIFORM = "uniform"
    SPARSE = "sparse"


class ExitCode(IntEnum):
    OK = 0
    VALIDATION_FAILED = 1
    INPUT = 2
    CONTRACT = 3
    NUMERIC = 4
