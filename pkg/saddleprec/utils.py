import hashlib
from collections import defaultdict
from typing import (
    List, Tuple, Iterable, Callable, TypeVar, Mapping, Optional,
)

import numpy as np

T = TypeVar('T')
R = TypeVar('R')


def group_by_key_func(iterable: Iterable[T], key_func: Callable[[T], R]) -> Mapping[R, List[T]]:
    # noinspection PyUnresolvedReferences
    """
    Create a dictionary from an iterable such that the keys are the result of evaluating a key function on elements
    of the iterable and the values are lists of elements all of which correspond to the key.

    >>> def si(d): return sorted(d.items())
    >>> si(group_by_key_func([1.0, -1.0, 1.0, 2.0], lambda x: x > 0))
    [(False, [-1.0]), (True, [1.0, 1.0, 2.0])]
    """
    result = defaultdict(list)
    for item in iterable:
        result[key_func(item)].append(item)
    return result


class cached_property(object):
    """
    A property that is only computed once per instance and then replaces itself
    with an ordinary attribute. Deleting the attribute resets the property.

    Used for the factorizations and derived blocks of otherwise immutable objects,
    so that nothing is computed until it is asked for.
    """

    def __init__(self, func):
        self.__doc__ = func.__doc__
        self.func = func

    def cached_property_wrapper(self, obj, _cls):
        if obj is None:
            return self

        value = obj.__dict__[self.func.__name__] = self.func(obj)
        return value

    __get__ = cached_property_wrapper


def assert_(condition, error=""):
    if not condition:
        if isinstance(error, str):
            error = AssertionError(error)
        raise error


def fro(matrix: np.ndarray) -> float:
    """Frobenius norm, which is 0.0 for empty arrays."""
    if matrix.size == 0:
        return 0.0
    return float(np.linalg.norm(matrix))


def relative_difference(actual: np.ndarray, expected: np.ndarray, scale: Optional[float] = None) -> float:
    """
    ||actual - expected||_F divided by scale, which defaults to ||expected||_F.
    A zero scale falls back to the absolute difference.
    """
    diff = fro(np.asarray(actual) - np.asarray(expected))
    if scale is None:
        scale = fro(np.asarray(expected))
    if scale == 0:
        return diff
    return diff / scale


def block_offsets(sizes: Iterable[int]) -> List[Tuple[int, int]]:
    """
    Half open (start, stop) index pairs for consecutive blocks.

    >>> block_offsets([3, 0, 2])
    [(0, 3), (3, 3), (3, 5)]
    """
    result = []
    start = 0
    for size in sizes:
        result.append((start, start + size))
        start += size
    return result


def split_blocks(matrix: np.ndarray, sizes: Iterable[int]) -> List[List[np.ndarray]]:
    """Split a square matrix into a grid of blocks with the given row/column sizes."""
    offsets = block_offsets(sizes)
    return [
        [matrix[r0:r1, c0:c1] for (c0, c1) in offsets]
        for (r0, r1) in offsets
    ]


def split_vector(vector: np.ndarray, sizes: Iterable[int]) -> List[np.ndarray]:
    return [vector[start:stop] for (start, stop) in block_offsets(sizes)]


def assemble_blocks(grid: List[List[np.ndarray]]) -> np.ndarray:
    """
    Inverse of split_blocks. Unlike np.block this accepts blocks with zero rows
    or columns anywhere in the grid.
    """
    row_sizes = [row[0].shape[0] for row in grid]
    col_sizes = [block.shape[1] for block in grid[0]]
    result = np.zeros((sum(row_sizes), sum(col_sizes)))
    for (r0, r1), row in zip(block_offsets(row_sizes), grid):
        for (c0, c1), block in zip(block_offsets(col_sizes), row):
            result[r0:r1, c0:c1] = block
    return result


def file_checksum(path) -> str:
    h = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(65536), b''):
            h.update(chunk)
    return h.hexdigest()
