"""Prediction metrics, residuals, paired t-tests and report files."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import InsufficientSamples, ShapeError
from .graph import node_strength

METRICS = ("mse", "mae", "strength_mae", "strength_kl")
KL_EPS = 1e-12


def _pair(pred, target):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction {pred.shape} and target {target.shape} differ")
    return pred, target


def metric_mse(pred, target) -> float:
    pred, target = _pair(pred, target)
    return float(np.mean((pred - target) ** 2))


def metric_mae(pred, target) -> float:
    pred, target = _pair(pred, target)
    return float(np.mean(np.abs(pred - target)))


def metric_strength_mae(pred, target) -> float:
    pred, target = _pair(pred, target)
    return float(np.mean(np.abs(node_strength(pred) - node_strength(target))))


def metric_strength_kl(pred, target, direction: str = "target||pred") -> float:
    """KL divergence between epsilon-smoothed, normalized node-strength vectors.

    The default direction is ``KL(target || pred)``; pass ``"pred||target"``
    for the reverse.
    """
    pred, target = _pair(pred, target)
    p = node_strength(target) + KL_EPS
    q = node_strength(pred) + KL_EPS
    p, q = p / p.sum(), q / q.sum()
    if direction == "pred||target":
        p, q = q, p
    elif direction != "target||pred":
        raise ValueError(f"unknown KL direction {direction!r}")
    return float(max(np.sum(p * np.log(p / q)), 0.0))


def residual_matrix(pred, target) -> tuple[np.ndarray, float]:
    pred, target = _pair(pred, target)
    res = np.abs(pred - target)
    return res, float(res.mean())


def compute_metrics(pred, target) -> dict:
    return {
        "mse": metric_mse(pred, target),
        "mae": metric_mae(pred, target),
        "strength_mae": metric_strength_mae(pred, target),
        "strength_kl": metric_strength_kl(pred, target),
    }


# --- Student t distribution ---------------------------------------------------

def _beta_continued_fraction(a: float, b: float, x: float, tol: float = 1e-15, max_iter: int = 500) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """``I_x(a, b)`` for ``a, b > 0`` and ``0 <= x <= 1``."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def t_two_tailed_p(t: float, df: float) -> float:
    """Two-tailed p-value ``P(|T| >= |t|)`` for Student's t with ``df`` degrees."""
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return min(1.0, max(0.0, regularized_incomplete_beta(df / 2.0, 0.5, x)))


@dataclass
class TTestResult:
    t: float
    p: float
    df: int


def paired_t_test(errors_a, errors_b) -> TTestResult:
    a = np.asarray(errors_a, dtype=np.float64)
    b = np.asarray(errors_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeError("paired samples must be 1-D and of equal length")
    n = a.size
    if n < 2:
        raise InsufficientSamples(f"paired t-test needs at least 2 pairs, got {n}")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, 1.0, n - 1)
        return TTestResult(math.copysign(math.inf, mean), 0.0, n - 1)
    t = mean / (sd / math.sqrt(n))
    return TTestResult(t, t_two_tailed_p(t, n - 1), n - 1)


# --- reports --------------------------------------------------------------------

@dataclass
class EvaluationReport:
    """Per-sample metric rows for one or more methods, plus significance tests."""

    rows: list = field(default_factory=list)
    tests: list = field(default_factory=list)

    def add(self, method: str, sample_id: str, pred, target) -> dict:
        row = {"sample_id": sample_id, "method": method, **compute_metrics(pred, target)}
        self.rows.append(row)
        return row

    @property
    def methods(self) -> list[str]:
        return list(dict.fromkeys(r["method"] for r in self.rows))

    def values(self, method: str, metric: str) -> np.ndarray:
        return np.array([r[metric] for r in self.rows if r["method"] == method])

    def aggregate(self, method: str) -> dict:
        return {metric: float(np.mean(self.values(method, metric))) for metric in METRICS}

    def compare(self) -> list:
        """Two-tailed paired t-tests for every metric and method pair."""
        self.tests = []
        for metric in METRICS:
            for ma, mb in itertools.combinations(self.methods, 2):
                res = paired_t_test(self.values(ma, metric), self.values(mb, metric))
                self.tests.append({"metric": metric, "method_a": ma, "method_b": mb,
                                   "t": res.t, "p": res.p})
        return self.tests


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def emit_report(report: EvaluationReport, path, residuals: dict | None = None) -> dict:
    """Write the metrics CSV, a summary text file and, if any, the t-test CSV.

    ``residuals`` optionally maps a file stem to a residual matrix written
    next to the report in ``.mat.csv`` format. Returns the written paths.
    """
    from .data import write_matrix

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = ("sample_id", "method", *METRICS)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in report.rows:
            writer.writerow([_fmt(row[c]) for c in columns])
        for method in report.methods:
            agg = report.aggregate(method)
            writer.writerow(["mean", method, *(_fmt(agg[c]) for c in METRICS)])
    written = {"report": path}

    lines = []
    for method in report.methods:
        agg = report.aggregate(method)
        n = len(report.values(method, "mse"))
        lines.append(f"{method} (n={n}): " + " ".join(f"{k}={agg[k]:.6g}" for k in METRICS))
    if report.tests:
        significant = [t for t in report.tests if t["p"] < 0.05]
        lines.append(f"paired t-tests: {len(report.tests)} comparisons, {len(significant)} with p < 0.05")
    summary = path.with_suffix(".summary.txt")
    summary.write_text("\n".join(lines) + "\n")
    written["summary"] = summary

    if report.tests:
        sig_path = path.with_name(path.stem + ".significance.csv")
        with open(sig_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("metric", "method_a", "method_b", "t", "p"))
            for t in report.tests:
                writer.writerow([_fmt(t[c]) if c in ("t", "p") else t[c]
                                 for c in ("metric", "method_a", "method_b", "t", "p")])
        written["significance"] = sig_path

    for stem, matrix in (residuals or {}).items():
        res_path = path.parent / f"{stem}.residual.mat.csv"
        write_matrix(res_path, matrix)
        written[stem] = res_path
    return written
