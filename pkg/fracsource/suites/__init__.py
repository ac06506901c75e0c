from .operators import OperatorsSuite
from .theorems import TheoremsSuite
from .titchmarsh import TitchmarshSuite
from .weak_solution import WeakSolutionSuite
