"""Estimated-FDP paths with adaptive cutoffs and ground-truth error metrics.

The core object is the running estimate

    path[k] = (1/k) * sum_{i <= k} h(p_i),        k = 1..n,

computed over p-values already arranged in their a-priori order.  The
selected cutoff is the largest k whose path entry does not exceed the
target level alpha; everything before it is rejected.  A conservative
variant inflates the estimate to (c + sum h) / (1 + k) before
thresholding.  Paths are stored as plain float arrays where index j
corresponds to position k = j + 1; entries may be +inf when the
accumulation function is unbounded and some p-value equals 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .accumfn import AccumulationSpec, evaluate
from .errors import ContractError, DomainError, ValidationError

__all__ = [
    "Rule",
    "OrderedPValues",
    "CutoffResult",
    "estimated_fdp_path",
    "estimated_fdp_path_plus",
    "select_cutoff",
    "run_accumulation_test",
    "fdp",
    "mfdp",
    "power_of_cutoff",
    "shift_discrete_pvalues",
]

_GRID_TOL = 1e-12


class Rule(enum.Enum):
    """Cutoff rule: the plain estimate or its conservative variant."""

    PLAIN = "plain"
    PLUS = "plus"


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class OrderedPValues:
    """P-values in their fixed a-priori order, optionally with truth labels.

    Attributes
    ----------
    values : ndarray of float
        p-values, each in [0, 1]; position i is rank i + 1.
    null_mask : ndarray of bool, optional
        True where the hypothesis is truly null.  Needed only for the
        error metrics, never for running a test.
    """

    values: np.ndarray
    null_mask: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise DomainError("p-values must form a nonempty 1-d sequence")
        if np.isnan(values).any() or values.min() < 0.0 or values.max() > 1.0:
            raise ValidationError("p-values must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen(values))
        if self.null_mask is not None:
            mask = np.asarray(self.null_mask)
            if mask.dtype != np.bool_:
                raise ValidationError("null_mask must be boolean")
            if mask.shape != values.shape:
                raise ValidationError("null_mask length must match the p-values")
            object.__setattr__(self, "null_mask", _frozen(mask))

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class CutoffResult:
    """Outcome of one accumulation test.

    ``k_hat`` positions are rejected; ``fdp_hat_path[j]`` is the
    estimate at k = j + 1 under the rule that was applied.
    """

    k_hat: int
    fdp_hat_path: np.ndarray
    rule: Rule
    alpha: float
    c_param: Optional[float] = None


PValueInput = Union[OrderedPValues, Sequence[float], np.ndarray]


def _as_values(pvals: PValueInput) -> np.ndarray:
    if isinstance(pvals, OrderedPValues):
        return pvals.values
    return OrderedPValues(np.asarray(pvals, dtype=float)).values


def estimated_fdp_path(pvals: PValueInput, spec: AccumulationSpec) -> np.ndarray:
    """Running mean of h over the ordered p-values.

    Returns the array of (1/k) * sum_{i<=k} h(p_i) for k = 1..n.
    """
    values = _as_values(pvals)
    h = evaluate(spec, values)
    k = np.arange(1, values.size + 1, dtype=float)
    return np.cumsum(h) / k


def estimated_fdp_path_plus(
    pvals: PValueInput, spec: AccumulationSpec, c: float
) -> np.ndarray:
    """Conservative variant: (c + sum_{i<=k} h(p_i)) / (1 + k) for k = 1..n."""
    c = float(c)
    if not c >= 0.0:
        raise DomainError(f"plus-rule constant must be nonnegative, got {c}")
    values = _as_values(pvals)
    h = evaluate(spec, values)
    k = np.arange(1, values.size + 1, dtype=float)
    return (c + np.cumsum(h)) / (1.0 + k)


def select_cutoff(path: Union[Sequence[float], np.ndarray], alpha: float) -> int:
    """Largest k with path[k] <= alpha, scanning every position.

    The scan is deliberately not first-crossing: a path may dip back
    under alpha after exceeding it, and the largest such k wins.  Ties
    at exactly alpha count as rejections.  Returns 0 when no position
    qualifies.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    arr = np.asarray(path, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError("path must be a nonempty 1-d sequence")
    hits = np.nonzero(arr <= alpha)[0]
    if hits.size == 0:
        return 0
    return int(hits[-1]) + 1


def run_accumulation_test(
    pvals: PValueInput,
    spec: AccumulationSpec,
    alpha: float,
    rule: Rule = Rule.PLAIN,
    c: Optional[float] = None,
) -> CutoffResult:
    """Build the path for the requested rule and select the cutoff.

    For ``Rule.PLUS`` the constant defaults to ``spec.c``; accumulation
    functions without a C parameter must supply ``c`` explicitly.
    """
    if rule is Rule.PLAIN:
        path = estimated_fdp_path(pvals, spec)
        used_c = None
    else:
        if c is None:
            c = spec.c_param
        if c is None:
            raise ContractError("the plus rule needs an explicit constant c")
        path = estimated_fdp_path_plus(pvals, spec, c)
        used_c = float(c)
    k_hat = select_cutoff(path, alpha)
    return CutoffResult(
        k_hat=k_hat, fdp_hat_path=path, rule=rule, alpha=float(alpha), c_param=used_c
    )


def _check_k(k: int, n: int) -> int:
    k = int(k)
    if not 0 <= k <= n:
        raise DomainError(f"k must lie in [0, {n}], got {k}")
    return k


def _require_mask(null_mask) -> np.ndarray:
    if null_mask is None:
        raise ContractError("ground-truth null_mask is required for this metric")
    mask = np.asarray(null_mask)
    if mask.dtype != np.bool_ or mask.ndim != 1:
        raise ValidationError("null_mask must be a 1-d boolean sequence")
    return mask


def fdp(k: int, null_mask) -> float:
    """False discovery proportion among the first k positions, 0 at k=0."""
    mask = _require_mask(null_mask)
    k = _check_k(k, mask.size)
    if k == 0:
        return 0.0
    return float(np.count_nonzero(mask[:k])) / k


def mfdp(k: int, null_mask, c: float) -> float:
    """Modified FDP with c added to the denominator: false / (c + k)."""
    c = float(c)
    if c < 0.0:
        raise DomainError(f"mfdp constant must be nonnegative, got {c}")
    mask = _require_mask(null_mask)
    k = _check_k(k, mask.size)
    if k == 0:
        return 0.0
    return float(np.count_nonzero(mask[:k])) / (c + k)


def power_of_cutoff(k: int, null_mask) -> float:
    """Fraction of all non-nulls that fall within the first k positions."""
    mask = _require_mask(null_mask)
    k = _check_k(k, mask.size)
    total = int(np.count_nonzero(~mask))
    if total == 0:
        raise ContractError("power is undefined without any non-null hypothesis")
    return float(np.count_nonzero(~mask[:k])) / total


def shift_discrete_pvalues(pvals: PValueInput, grid_size: int) -> OrderedPValues:
    """Remap grid p-values k/G to k/(G+1), clearing exact ones.

    Permutation tests emit p-values on the exact grid {1/G, ..., G/G}.
    The value 1 makes unbounded accumulation functions infinite, so
    this utility nudges every grid point down by one denominator step.
    The transformation is offered separately rather than applied
    silently, because it slightly perturbs the distributional
    guarantees.

    Raises
    ------
    ValidationError
        If any value is farther than 1e-12 from the grid, or grid_size
        is not a positive integer.
    """
    grid_size = int(grid_size)
    if grid_size < 1:
        raise ValidationError(f"grid_size must be >= 1, got {grid_size}")
    mask = pvals.null_mask if isinstance(pvals, OrderedPValues) else None
    values = _as_values(pvals)
    numerators = np.rint(values * grid_size)
    if np.max(np.abs(values * grid_size - numerators)) > _GRID_TOL * grid_size:
        raise ValidationError("p-values are not on the stated grid")
    if numerators.min() < 1 or numerators.max() > grid_size:
        raise ValidationError("grid numerators must lie in [1, grid_size]")
    shifted = numerators / (grid_size + 1.0)
    return OrderedPValues(shifted, null_mask=mask)
