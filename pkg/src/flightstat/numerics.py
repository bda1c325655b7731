"""Shared numerical core: least-squares fitting and evaluation metrics.

The linear predictors elsewhere in the package are all thin wrappers
around :func:`fit_ols` / :func:`predict_linear`.  Metrics follow the
explained-variance definition of R-squared,

    R^2 = sum_i (yhat_i - ybar)^2 / sum_i (y_i - ybar)^2

which coincides with 1 - SSE/SST only for least-squares fits that
include an intercept; for other predictors it may exceed 1, so
:class:`MetricReport` also carries MSE and MAE.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegreesOfFreedomError, SingularDesignError, UndefinedVarianceError

# Delay classification threshold in minutes: strictly more than 15 minutes
# late counts as delayed, exactly 15 is on time.
DELAY_THRESHOLD_MINUTES = 15.0

# Condition estimate of X'X above which the design is treated as singular.
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class LinearModel:
    """A fitted linear predictor y = intercept + coefficients . x."""

    coefficients: tuple[float, ...]
    intercept: float | None
    feature_names: tuple[str, ...]

    def __post_init__(self):
        if len(self.coefficients) != len(self.feature_names):
            raise ValueError("coefficient count must equal feature-name count")
        values = list(self.coefficients) + ([self.intercept] if self.intercept is not None else [])
        if not all(np.isfinite(v) for v in values):
            raise ValueError("linear model parameters must be finite")


@dataclass(frozen=True)
class MetricReport:
    """Evaluation summary for one model on one dataset."""

    r_squared: float
    adjusted_r_squared: float
    mse: float
    mae: float
    accuracy: float
    n: int
    k: int


def _nearly_dependent_columns(x: np.ndarray, names: list[str]) -> list[str]:
    """Columns that add (almost) no rank: candidates causing singularity."""
    offenders = []
    basis: list[int] = []
    for j in range(x.shape[1]):
        cols = basis + [j]
        sub = x[:, cols]
        s = np.linalg.svd(sub, compute_uv=False)
        if s[-1] <= max(sub.shape) * np.finfo(float).eps * s[0] or s[-1] == 0.0:
            offenders.append(names[j])
        else:
            basis.append(j)
    return offenders


def fit_ols(x, y, with_intercept: bool = False, feature_names: list[str] | None = None) -> LinearModel:
    """Fit ordinary least squares via the normal equations.

    Parameters
    ----------
    x : (n, k) array_like
        Design matrix.
    y : (n,) array_like
        Target vector.
    with_intercept : bool
        Append a constant column and report its coefficient separately.
    feature_names : list of str, optional
        Names for error messages and the fitted model; defaults to x0..x{k-1}.

    Returns
    -------
    LinearModel
        The minimizer of ||y - X beta||^2.

    Raises
    ------
    ValueError
        On shape mismatch or too few rows.
    SingularDesignError
        When the normal matrix has condition estimate above 1e12.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, k = x.shape
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    needed = k + (1 if with_intercept else 0)
    if n < needed:
        raise ValueError(f"need at least {needed} rows to fit {k} coefficients, got {n}")

    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(k)]
    if len(names) != k:
        raise ValueError("feature_names length must match column count")

    design = np.column_stack([x, np.ones(n)]) if with_intercept else x
    gram = design.T @ design
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        all_names = names + (["<intercept>"] if with_intercept else [])
        offenders = _nearly_dependent_columns(design, all_names)
        raise SingularDesignError(
            f"singular design (condition estimate {cond:.3e}); "
            f"offending columns: {offenders or all_names}",
            columns=offenders or all_names,
        )
    beta = np.linalg.solve(gram, design.T @ y)

    if with_intercept:
        return LinearModel(tuple(beta[:-1]), float(beta[-1]), tuple(names))
    return LinearModel(tuple(beta), None, tuple(names))


def predict_linear(model: LinearModel, x) -> float:
    """Evaluate intercept + sum(beta_i * x_i) for one feature vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (len(model.coefficients),):
        raise ValueError(
            f"feature vector has shape {x.shape}, model expects ({len(model.coefficients)},)"
        )
    out = float(np.dot(model.coefficients, x))
    if model.intercept is not None:
        out += model.intercept
    return out


def predict_linear_many(model: LinearModel, x) -> np.ndarray:
    """Vectorized :func:`predict_linear` over the rows of x."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != len(model.coefficients):
        raise ValueError(f"matrix has shape {x.shape}, model expects (n, {len(model.coefficients)})")
    out = x @ np.asarray(model.coefficients)
    if model.intercept is not None:
        out = out + model.intercept
    return out


def r_squared(y, y_hat) -> float:
    """Coefficient of determination, explained-variance form.

    Returns sum((yhat - ybar)^2) / sum((y - ybar)^2) where ybar is the
    mean of the observed values.
    """
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.ndim != 1:
        raise ValueError("y and y_hat must be 1-D with equal length")
    if len(y) < 2:
        raise ValueError("need at least two observations")
    y_bar = y.mean()
    sst = float(np.sum((y - y_bar) ** 2))
    if sst == 0.0:
        raise UndefinedVarianceError("target vector is constant; R^2 undefined")
    return float(np.sum((y_hat - y_bar) ** 2)) / sst


def adjusted_r_squared(r2: float, n: int, k: int) -> float:
    """R^2 penalized for model size: 1 - (1 - R^2)(n - 1)/(n - k - 1)."""
    if n <= k + 1:
        raise DegreesOfFreedomError(f"adjusted R^2 needs n > k + 1, got n={n}, k={k}")
    return 1.0 - (1.0 - r2) * (n - 1) / (n - k - 1)


def evaluate(y, y_hat, k: int) -> MetricReport:
    """Compute the full metric set for predictions y_hat against y.

    Accuracy is the agreement rate of the 15-minute delayed/on-time
    classification derived from y and y_hat.
    """
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.ndim != 1:
        raise ValueError("y and y_hat must be 1-D with equal length")
    n = len(y)
    r2 = r_squared(y, y_hat)
    adj = adjusted_r_squared(r2, n, k)
    err = y_hat - y
    mse = float(np.mean(err**2))
    mae = float(np.mean(np.abs(err)))
    accuracy = float(np.mean((y > DELAY_THRESHOLD_MINUTES) == (y_hat > DELAY_THRESHOLD_MINUTES)))
    return MetricReport(r2, adj, mse, mae, accuracy, n, k)
