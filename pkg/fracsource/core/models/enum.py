from enum import Enum


class BoundaryCondition(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


class SolveMethod(str, Enum):
    SPECTRAL = "spectral"
    CONTOUR = "contour"
    L1 = "l1"


class BasisKind(str, Enum):
    EIGEN = "eigen"
    NODAL = "nodal"


class Regime(str, Enum):
    SERIES = "series"
    ASYMPTOTIC = "asymptotic"
    INTEGRAL = "integral"


class Experiment(str, Enum):
    FORWARD = "forward"
    INVERT_H = "invert-h"
    INVERT_MU_H = "invert-mu-h"
    HYPERBOLIC = "hyperbolic"
    VARIABLE_ORDER = "variable-order"
    DELAYED_WINDOW = "delayed-window"


class ProfileKind(str, Enum):
    CONSTANT = "constant"
    AFFINE = "affine"
    BUMP = "bump"
    INDICATOR = "indicator"
    SINE = "sine"
    TABLE = "table"
