import itertools
from typing import Iterable, Iterator, TypeVar

import numpy as np

_T = TypeVar("_T")


def batched(iterable: Iterable[_T], n: int) -> Iterator[list[_T]]:
    "Batch data into lists of length n. The last batch may be shorter."
    # batched(range(7), 3) --> [0, 1, 2] [3, 4, 5] [6]
    if n < 1:
        raise ValueError("n must be at least one")
    it = iter(iterable)
    while batch := list(itertools.islice(it, n)):
        yield batch


def index_chunks(size: int, n: int) -> Iterator[np.ndarray]:
    """Consecutive index arrays covering range(size), n at a time."""
    for chunk in batched(range(size), n):
        yield np.asarray(chunk, dtype=np.intp)
