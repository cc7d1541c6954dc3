"""JSON wire format for matrices: row-major arrays of arrays of floats.

Deserializers validate membership and surface the violated constraint plus
its residual through MembershipError.
"""

import json

import numpy as np

from .errors import InvalidArgumentError
from .lie import AlgebraVector, GroupElement


def matrix_to_jsonable(a) -> list:
    arr = np.asarray(a, dtype=np.float64)
    return [[float(v) for v in row] for row in arr]


def _parse_matrix(obj) -> np.ndarray:
    try:
        arr = np.array(obj, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"not a numeric matrix: {exc}")
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def algebra_from_jsonable(obj) -> AlgebraVector:
    """Parse and validate an algebra element; raises MembershipError on violation."""
    return AlgebraVector(_parse_matrix(obj))


def group_from_jsonable(obj) -> GroupElement:
    """Parse and validate a group element; raises MembershipError on violation."""
    return GroupElement(_parse_matrix(obj))


def load_group_matrix(path: str) -> GroupElement:
    with open(path) as fh:
        return group_from_jsonable(json.load(fh))


def load_algebra_matrix(path: str) -> AlgebraVector:
    with open(path) as fh:
        return algebra_from_jsonable(json.load(fh))
