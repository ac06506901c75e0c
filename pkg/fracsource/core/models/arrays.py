from typing import Any

import numpy as np
import pydantic as pd
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]
IndexArray = NDArray[np.intp]

# NOTE: pydantic v1 cannot validate parametrized ndarray aliases, so model fields are annotated with plain
#       np.ndarray and the aliases above are used in function signatures only.


class ArrayModel(pd.BaseModel):
    """Immutable container for numpy-backed numerical objects.

    Array fields are copied on construction and flagged read-only, so instances can be shared between threads.
    """

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    def __init__(self, **data: Any) -> None:
        super().__init__(**data)
        for name, value in list(self.__dict__.items()):
            if isinstance(value, np.ndarray):
                frozen = value.copy()
                frozen.flags.writeable = False
                self.__dict__[name] = frozen
