"""Input validation for verification tables."""

import numbers

import numpy as np

from .exceptions import InputError, ZeroCellForMi
from .model import VerificationTable

CELL_NAMES = ("a11", "a10", "a01", "a00", "b11", "b10", "b01", "b00",
              "c11", "c10", "c01", "c00")


def _parse_count(value, position):
    name = CELL_NAMES[position]
    where = f"argument {position + 1} ({name})"
    if isinstance(value, str):
        text = value.strip()
        if not text.lstrip("+-").isdigit():
            raise InputError(f"{where}: {value!r} is not an integer")
        v = int(text)
    elif isinstance(value, (bool, np.bool_)):
        raise InputError(f"{where}: boolean is not a count")
    elif isinstance(value, numbers.Integral):
        v = int(value)
    elif isinstance(value, numbers.Real):
        if not float(value).is_integer():
            raise InputError(f"{where}: {value!r} has a fractional part")
        v = int(value)
    else:
        raise InputError(f"{where}: {value!r} is not a count")
    if v < 0:
        raise InputError(f"{where}: {v} is negative")
    return v


def check_table(X, require_mi=False):
    """Validate and convert input to a :class:`VerificationTable`.

    Parameters
    ----------
    X : VerificationTable, sequence of 12 counts, or array of shape (3, 4)
        Counts in the order a11, a10, a01, a00, b11, ..., c00. Rows of a
        (3, 4) array are the verified diseased, verified non-diseased and
        unverified counts.
    require_mi : bool
        Also require every verified count a_ij and b_ij to be positive.

    Raises
    ------
    InputError
        Naming the offending position.
    ZeroCellForMi
        If ``require_mi`` and a verified count is zero.
    """
    if isinstance(X, VerificationTable):
        counts = list(X.counts())
    else:
        arr = np.asarray(X, dtype=object)
        if arr.shape not in ((12,), (3, 4)):
            raise InputError(f"expected 12 counts or a 3x4 array, got shape {arr.shape}")
        counts = list(arr.reshape(12))
    counts = [_parse_count(v, k) for k, v in enumerate(counts)]
    if require_mi:
        zero = [CELL_NAMES[k] for k in range(8) if counts[k] == 0]
        if zero:
            raise ZeroCellForMi(
                "multiple imputation requires every verified frequency to be positive; "
                f"zero in {', '.join(zero)}")
    return VerificationTable.from_counts(counts)


def read_table_file(path):
    """Read 12 whitespace-separated counts from a file; ``#`` starts a comment."""
    tokens = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            tokens.extend(line.split("#", 1)[0].split())
    if len(tokens) != 12:
        raise InputError(f"{path}: expected 12 counts, found {len(tokens)}")
    return tokens


def check_probability(value, name):
    value = float(value)
    if not 0.0 < value < 1.0:
        raise InputError(f"{name} must lie in (0, 1), got {value}")
    return value
