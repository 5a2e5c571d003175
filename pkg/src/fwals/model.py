"""Dataset container, CSV ingestion and sub-model bookkeeping."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    CapacityError,
    ConfigError,
    DataError,
    DomainError,
    MissingColumnError,
    ParseError,
    RankError,
)

RANK_RTOL = 1e-10
MAX_ENUM_K2 = 20

ColumnRef = Union[int, str]


def check_full_column_rank(X: np.ndarray, name: str = "X1") -> None:
    """Raise RankError unless the smallest singular value of X is
    above ``RANK_RTOL`` times the largest."""
    s = np.linalg.svd(X, compute_uv=False)
    if s.size == 0 or s[-1] <= RANK_RTOL * s[0]:
        smin = float(s[-1]) if s.size else 0.0
        raise RankError(f"{name} is rank deficient (smallest singular value {smin:.3e})")


@dataclass(frozen=True)
class Dataset:
    """Response plus core (X1) and auxiliary (X2) regressor blocks.

    Arrays are copied and made read-only on construction.
    """

    y: np.ndarray
    X1: np.ndarray
    X2: np.ndarray
    core_names: Optional[tuple] = None
    aux_names: Optional[tuple] = None
    response_name: Optional[str] = None

    def __post_init__(self):
        y = np.array(self.y, dtype=float).reshape(-1)
        X1 = np.array(self.X1, dtype=float)
        X2 = np.array(self.X2, dtype=float)
        if X1.ndim == 1:
            X1 = X1[:, None]
        if X2.ndim == 1:
            X2 = X2[:, None]
        n = y.shape[0]
        if X1.shape[0] != n or X2.shape[0] != n:
            raise DataError(
                f"row mismatch: y has {n}, X1 has {X1.shape[0]}, X2 has {X2.shape[0]}"
            )
        k1, k2 = X1.shape[1], X2.shape[1]
        if k1 < 1 or k2 < 1:
            raise DataError(f"need k1 >= 1 and k2 >= 1, got k1={k1}, k2={k2}")
        if n <= k1 + k2:
            raise DataError(f"need N > k1 + k2, got N={n}, k={k1 + k2}")
        for label, arr in (("y", y), ("X1", X1), ("X2", X2)):
            if not np.all(np.isfinite(arr)):
                raise DataError(f"{label} contains non-finite entries")
        check_full_column_rank(X1, "X1")
        for arr in (y, X1, X2):
            arr.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X1", X1)
        object.__setattr__(self, "X2", X2)
        for attr, k in (("core_names", k1), ("aux_names", k2)):
            names = getattr(self, attr)
            if names is not None:
                names = tuple(str(s) for s in names)
                if len(names) != k:
                    raise DataError(f"{attr} has {len(names)} entries, expected {k}")
                object.__setattr__(self, attr, names)

    @property
    def N(self) -> int:
        return self.y.shape[0]

    @property
    def k1(self) -> int:
        return self.X1.shape[1]

    @property
    def k2(self) -> int:
        return self.X2.shape[1]

    @property
    def k(self) -> int:
        return self.k1 + self.k2

    @property
    def X(self) -> np.ndarray:
        return np.hstack([self.X1, self.X2])

    def with_aux(self, X2: np.ndarray) -> "Dataset":
        """Same response and core block, different auxiliary block."""
        return Dataset(self.y, self.X1, X2, core_names=self.core_names,
                       response_name=self.response_name)


@dataclass(frozen=True)
class SubmodelSelection:
    """Which auxiliary regressors a sub-model keeps.

    ``index`` is the binary code of ``included`` with bit j standing for
    auxiliary regressor j.
    """

    index: int
    included: tuple = field(default=())

    @classmethod
    def from_index(cls, index: int, k2: int) -> "SubmodelSelection":
        return cls(index, tuple(bool((index >> j) & 1) for j in range(k2)))

    @property
    def k2(self) -> int:
        return len(self.included)

    @property
    def k2m(self) -> int:
        return sum(self.included)

    @property
    def mask(self) -> np.ndarray:
        return np.array(self.included, dtype=bool)

    @property
    def selection_matrix(self) -> np.ndarray:
        """Pi_m, shape (k2m, k2): rows pick the included regressors."""
        return np.eye(self.k2)[self.mask]


def _check_k2_cap(k2: int, cap: int) -> None:
    if k2 < 1:
        raise ConfigError(f"k2 must be >= 1, got {k2}")
    if k2 > cap:
        raise CapacityError(f"k2={k2} exceeds the enumeration cap of {cap} (2^{cap} sub-models)")


def submodel_masks(k2: int, cap: int = MAX_ENUM_K2) -> np.ndarray:
    """All 2^k2 inclusion masks as a (2^k2, k2) boolean array, binary counting order."""
    _check_k2_cap(k2, cap)
    idx = np.arange(2 ** k2)[:, None]
    return ((idx >> np.arange(k2)[None, :]) & 1).astype(bool)


def enumerate_submodels(k2: int) -> list:
    _check_k2_cap(k2, MAX_ENUM_K2)
    return [SubmodelSelection.from_index(m, k2) for m in range(2 ** k2)]


def check_box(w, k2: Optional[int] = None, tol: float = 1e-12) -> np.ndarray:
    """Validate a regressor-wise weight vector in [0, 1]^k2 and return it clipped."""
    w = np.asarray(w, dtype=float).reshape(-1)
    if k2 is not None and w.shape[0] != k2:
        raise DomainError(f"weight vector has length {w.shape[0]}, expected {k2}")
    if not np.all(np.isfinite(w)) or np.any(w < -tol) or np.any(w > 1 + tol):
        raise DomainError(f"weights outside [0, 1]: {w}")
    return np.clip(w, 0.0, 1.0)


def check_simplex(w, tol: float = 1e-10) -> np.ndarray:
    w = np.asarray(w, dtype=float).reshape(-1)
    if np.any(w < -tol) or np.any(w > 1 + tol) or abs(w.sum() - 1.0) > tol:
        raise DomainError("weights are not on the unit simplex")
    return w


# --------------------------------------------------------------------------
# CSV ingestion
# --------------------------------------------------------------------------

def _resolve(ref: ColumnRef, header: Optional[list], ncol: int) -> int:
    if isinstance(ref, str) and not ref.lstrip("-").isdigit():
        if header is None:
            raise ConfigError(f"column {ref!r} given by name but the file has no header")
        try:
            return header.index(ref)
        except ValueError:
            raise MissingColumnError(f"column {ref!r} not found in header") from None
    j = int(ref)
    if j < 0 or j >= ncol:
        raise MissingColumnError(f"column index {j} out of range (file has {ncol} columns)")
    return j


def load_dataset(
    path: Union[str, Path],
    core_columns: Sequence[ColumnRef],
    aux_columns: Sequence[ColumnRef],
    response: ColumnRef,
    header: bool = True,
) -> Dataset:
    """Read a numeric CSV and partition it into y, X1, X2.

    Columns are given by 0-based index or header name. Column order inside
    each block follows the order given.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} is empty")
    names = None
    if header:
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
    ncol = len(names) if names is not None else len(rows[0])

    core_idx = [_resolve(c, names, ncol) for c in core_columns]
    aux_idx = [_resolve(c, names, ncol) for c in aux_columns]
    y_idx = _resolve(response, names, ncol)
    if not core_idx or not aux_idx:
        raise ConfigError("need at least one core and one auxiliary column")
    used = core_idx + aux_idx + [y_idx]
    if len(set(used)) != len(used):
        dup = sorted({j for j in used if used.count(j) > 1})
        raise ConfigError(f"column(s) {dup} assigned to more than one role")

    data = np.empty((len(rows), ncol))
    first_row = 2 if header else 1
    for i, row in enumerate(rows):
        if len(row) != ncol:
            raise ParseError(f"row {i + first_row}: expected {ncol} fields, got {len(row)}",
                             row=i + first_row)
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"row {i + first_row}, column {j}: non-numeric value {cell!r}",
                                 row=i + first_row, col=j) from None
            if not math.isfinite(v):
                raise ParseError(f"row {i + first_row}, column {j}: non-finite value {cell!r}",
                                 row=i + first_row, col=j)
            data[i, j] = v

    def label(j):
        return names[j] if names is not None else str(j)

    return Dataset(
        data[:, y_idx],
        data[:, core_idx],
        data[:, aux_idx],
        core_names=tuple(label(j) for j in core_idx),
        aux_names=tuple(label(j) for j in aux_idx),
        response_name=label(y_idx),
    )
