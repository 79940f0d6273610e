"""Design-matrix encoding, OLS and Huber robust regression, effect sizes."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
from scipy import stats

from .das import CATEGORIES
from .table import RegressionRow

log = logging.getLogger(__name__)

CONTINUOUS = (
    "ln_n_authors",
    "ln_n_references_tot",
    "p_year",
    "p_month",
    "ln_h_index_mean",
    "h_index_median",
)


class RankDeficient(ValueError):
    def __init__(self, columns: Sequence[str]):
        self.columns = list(columns)
        super().__init__(f"design matrix is rank deficient; dependent columns: {self.columns}")


class TooFewRows(ValueError):
    pass


class NonPositiveMean(ValueError):
    pass


@dataclass(frozen=True)
class Formula:
    """Terms of the citation model.

    ``zero_as_reference`` folds category 0 into the no-statement reference
    level, giving one dummy per category 1..3 only.
    """

    window: int = 3
    continuous: tuple[str, ...] = CONTINUOUS
    interaction_levels: tuple[int, ...] = (1, 2, 3)
    journal_field: bool = True
    zero_as_reference: bool = False


@dataclass(frozen=True)
class DesignMatrix:
    columns: tuple[str, ...]
    values: np.ndarray
    reference_levels: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]


def das_column(level: int) -> str:
    return f"C(das_category){level}"


def encode_design(
    rows: Sequence[RegressionRow], formula: Formula = Formula(), check: bool = True
) -> tuple[DesignMatrix, np.ndarray]:
    """Dummy-encode rows; returns the design matrix and ln(n_cit_Y + 1).

    Reference levels: no statement for das_category, the lexicographically
    first field present for journal_field.  ``check=False`` skips the rank
    check (the fitters repeat it).
    """
    if not rows:
        raise TooFewRows("no rows")
    n = len(rows)
    names: list[str] = ["Intercept"]
    cols: list[np.ndarray] = [np.ones(n)]

    for name in formula.continuous:
        names.append(name)
        cols.append(np.array([r.value(name) for r in rows], dtype=float))

    cats = np.array([-1 if r.das_category is None else r.das_category for r in rows])
    if formula.zero_as_reference:
        cats = np.where(cats == 0, -1, cats)
        levels = [c for c in CATEGORIES if c != 0]
    else:
        levels = list(CATEGORIES)
    for level in levels:
        names.append(das_column(level))
        cols.append((cats == level).astype(float))

    reference = {"das_category": "none"}
    if formula.journal_field:
        fields_present = sorted({r.journal_field for r in rows})
        reference["journal_field"] = fields_present[0]
        values = np.array([r.journal_field for r in rows], dtype=object)
        for f in fields_present[1:]:
            names.append(f"C(journal_field){f}")
            cols.append((values == f).astype(float))

    is_plos = np.array([r.is_plos for r in rows], dtype=float)
    for flag in ("das_required", "das_encouraged"):
        names.append(f"{flag}True")
        cols.append(np.array([getattr(r, flag) for r in rows], dtype=float))
    names.append("is_plosTrue")
    cols.append(is_plos)
    for level in formula.interaction_levels:
        names.append(f"{das_column(level)}:is_plosTrue")
        cols.append((cats == level).astype(float) * is_plos)

    x = np.column_stack(cols)
    y = np.log1p(np.array([getattr(r, f"n_cit_{formula.window}") for r in rows], dtype=float))
    design = DesignMatrix(tuple(names), x, reference)
    if check:
        check_rank(design)
    return design, y


def check_rank(design: DesignMatrix, rtol: float = 1e-10) -> None:
    """Raise RankDeficient naming the columns a pivoted QR finds dependent."""
    x = design.values
    zero = [name for name, col in zip(design.columns, x.T) if not np.any(col)]
    if zero:
        raise RankDeficient(zero)
    _, r, piv = scipy.linalg.qr(x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > rtol * diag[0])) if diag.size else 0
    if rank < x.shape[1]:
        raise RankDeficient([design.columns[i] for i in sorted(piv[rank:])])


# ---------------------------------------------------------------------------
# Fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Coefficient:
    name: str
    estimate: float
    std_error: float
    t_value: float
    p_value: float


@dataclass(frozen=True)
class FitResult:
    method: str  # ols | robust
    coefficients: tuple[Coefficient, ...]
    n: int
    df_resid: int
    residual_std_error: float
    r_squared: Optional[float] = None
    adj_r_squared: Optional[float] = None
    f_statistic: Optional[float] = None
    f_df: Optional[tuple[int, int]] = None
    f_p_value: Optional[float] = None
    converged: bool = True
    iterations: int = 0

    @property
    def params(self) -> np.ndarray:
        return np.array([c.estimate for c in self.coefficients])

    @property
    def std_errors(self) -> np.ndarray:
        return np.array([c.std_error for c in self.coefficients])

    def __getitem__(self, name: str) -> Coefficient:
        for c in self.coefficients:
            if c.name == name:
                return c
        raise KeyError(name)


def _as_arrays(x, names):
    if isinstance(x, DesignMatrix):
        return x.values, list(x.columns)
    x = np.asarray(x, dtype=float)
    return x, list(names or (f"x{i}" for i in range(x.shape[1])))


def _least_squares(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """QR solve; returns (beta, (X'X)^-1)."""
    q, r = np.linalg.qr(x, mode="reduced")
    beta = scipy.linalg.solve_triangular(r, q.T @ y)
    r_inv = scipy.linalg.solve_triangular(r, np.eye(r.shape[0]))
    return beta, r_inv @ r_inv.T


def _coefficients(names, beta, cov, df_resid) -> tuple[Coefficient, ...]:
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    out = []
    for name, b, s in zip(names, beta, se):
        if s > 0:
            t = b / s
            p = float(2 * stats.t.sf(abs(t), df_resid))
        else:
            t = math.copysign(math.inf, b) if b else math.nan
            p = 0.0 if b else 1.0
        out.append(Coefficient(name, float(b), float(s), float(t), p))
    return tuple(out)


def _validate(x: np.ndarray, names: list[str]) -> None:
    n, k = x.shape
    if n <= k:
        raise TooFewRows(f"{n} rows for {k} columns")
    check_rank(DesignMatrix(tuple(names), x))


def fit_ols(x, y, names: Optional[Sequence[str]] = None) -> FitResult:
    """Ordinary least squares with classical standard errors."""
    x, names = _as_arrays(x, names)
    y = np.asarray(y, dtype=float)
    _validate(x, names)
    n, k = x.shape
    beta, xtx_inv = _least_squares(x, y)
    resid = y - x @ beta
    rss = float(resid @ resid)
    df_resid = n - k
    sigma2 = rss / df_resid
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    adj = 1.0 - (1.0 - r2) * (n - 1) / df_resid
    df_model = k - 1
    if df_model > 0 and rss > 0:
        f = ((tss - rss) / df_model) / sigma2
        f_p = float(stats.f.sf(f, df_model, df_resid))
    elif df_model > 0:
        f, f_p = math.inf, 0.0
    else:
        f, f_p = 0.0, 1.0
    return FitResult(
        method="ols",
        coefficients=_coefficients(names, beta, sigma2 * xtx_inv, df_resid),
        n=n,
        df_resid=df_resid,
        residual_std_error=math.sqrt(sigma2),
        r_squared=r2,
        adj_r_squared=adj,
        f_statistic=float(f),
        f_df=(df_model, df_resid),
        f_p_value=f_p,
    )


def mad_scale(resid: np.ndarray) -> float:
    """Median absolute residual over 0.6745 (consistent for Gaussian noise)."""
    return float(np.median(np.abs(resid)) / 0.6744897501960817)


def huber_weights(u: np.ndarray, c: float) -> np.ndarray:
    a = np.abs(u)
    return np.where(a <= c, 1.0, c / np.where(a == 0, 1.0, a))


def fit_robust(
    x,
    y,
    names: Optional[Sequence[str]] = None,
    tuning_c: float = 1.345,
    tol: float = 1e-8,
    max_iter: int = 50,
    unit_weights: bool = False,
) -> FitResult:
    """Huber M-estimate by iteratively reweighted least squares.

    Starts from OLS; each iteration re-estimates the residual scale by MAD.
    Stops when no coefficient moves by ``tol`` or more.  Non-convergence is
    reported through ``converged=False`` rather than raised.
    """
    x, names = _as_arrays(x, names)
    y = np.asarray(y, dtype=float)
    _validate(x, names)
    n, k = x.shape
    beta, xtx_inv = _least_squares(x, y)
    w = np.ones(n)
    converged = False
    iterations = 0
    scale = mad_scale(y - x @ beta)
    for iterations in range(1, max_iter + 1):
        resid = y - x @ beta
        scale = mad_scale(resid)
        if scale == 0.0:
            converged = True
            break
        w = np.ones(n) if unit_weights else huber_weights(resid / scale, tuning_c)
        sw = np.sqrt(w)
        new_beta, xtx_inv = _least_squares(x * sw[:, None], y * sw)
        step = float(np.max(np.abs(new_beta - beta)))
        beta = new_beta
        if step < tol:
            converged = True
            break
    if not converged:
        log.warning("robust fit did not converge in %d iterations", max_iter)
    resid = y - x @ beta
    df_resid = n - k
    sigma2 = float(w @ resid**2) / df_resid
    return FitResult(
        method="robust",
        coefficients=_coefficients(names, beta, sigma2 * xtx_inv, df_resid),
        n=n,
        df_resid=df_resid,
        residual_std_error=mad_scale(resid),
        converged=converged,
        iterations=iterations,
    )


# ---------------------------------------------------------------------------
# Interpretation and tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EffectSize:
    percent: float
    band: Optional[float] = None


def effect_size(beta: float, mean_citations: float, std_error: Optional[float] = None) -> EffectSize:
    """Percent citation gain (exp(beta) - 1) / mean_citations.

    The uncertainty band is half the spread of the same quantity at beta +/- SE.
    """
    if mean_citations <= 0:
        raise NonPositiveMean(f"mean citations {mean_citations} must be positive")
    percent = 100.0 * math.expm1(beta) / mean_citations
    band = None
    if std_error is not None:
        hi = math.expm1(beta + std_error) / mean_citations
        lo = math.expm1(beta - std_error) / mean_citations
        band = 100.0 * (hi - lo) / 2
    return EffectSize(percent, band)


def stars(p: float) -> str:
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


def coefficient_csv(fits: Sequence[FitResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["method", "term", "estimate", "std_error", "t_value", "p_value", "stars"])
    for fit in fits:
        for c in fit.coefficients:
            writer.writerow([fit.method, c.name, repr(c.estimate), repr(c.std_error),
                             repr(c.t_value), repr(c.p_value), stars(c.p_value)])
    for fit in fits:
        for label, value in (
            ("observations", fit.n),
            ("r_squared", fit.r_squared),
            ("adj_r_squared", fit.adj_r_squared),
            ("residual_std_error", fit.residual_std_error),
            ("df_resid", fit.df_resid),
            ("f_statistic", fit.f_statistic),
        ):
            writer.writerow([fit.method, label, "" if value is None else repr(value), "", "", "", ""])
    return buf.getvalue()


def coefficient_text(fits: Sequence[FitResult]) -> str:
    """Aligned side-by-side table: estimate with stars, SE in parentheses below."""
    names = [c.name for c in fits[0].coefficients]
    width = max(len(n) for n in names + ["Observations"]) + 2
    col = 18
    lines = [" " * width + "".join(f.method.upper().rjust(col) for f in fits)]
    for name in names:
        est = "".join(f"{f[name].estimate:.3f}{stars(f[name].p_value)}".rjust(col) for f in fits)
        se = "".join(f"({f[name].std_error:.4f})".rjust(col) for f in fits)
        lines += [name.ljust(width) + est, " " * width + se]
    lines.append("-" * (width + col * len(fits)))

    def row(label, fmt):
        return label.ljust(width) + "".join(fmt(f).rjust(col) for f in fits)

    lines.append(row("Observations", lambda f: f"{f.n}"))
    lines.append(row("R2", lambda f: "" if f.r_squared is None else f"{f.r_squared:.3f}"))
    lines.append(row("Adjusted R2", lambda f: "" if f.adj_r_squared is None else f"{f.adj_r_squared:.3f}"))
    lines.append(row("Residual Std. Error", lambda f: f"{f.residual_std_error:.3f}"))
    lines.append(row("F Statistic", lambda f: "" if f.f_statistic is None else f"{f.f_statistic:.3f}"))
    lines.append("Note: * p<0.1; ** p<0.05; *** p<0.01")
    return "\n".join(lines) + "\n"
