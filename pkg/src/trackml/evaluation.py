"""Exact-match accuracy, stratified partitions, k-fold CV and report tables."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import clone

from .dataset import BOTH_TARGETS, Dataset, Target
from .models import DISPLAY_NAMES

RATIOS = {"50-50": 0.5, "60-40": 0.6, "70-30": 0.7, "80-20": 0.8}
REPORT_COLUMNS = ("model", "target", "ratio_or_fold", "accuracy_percent", "n_train", "n_test", "seed")
SUMMARY_RATIO = "70-30"


def parse_ratio(value) -> str:
    """Canonical ``"70-30"`` style key for a partition ratio."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        key = f"{round(100 * value)}-{100 - round(100 * value)}"
    else:
        key = str(value).strip().replace("/", "-").replace("%", "")
    if key not in RATIOS:
        raise ValueError(f"unsupported ratio {value!r}; choose from {list(RATIOS)}")
    return key


def accuracy(predicted, actual) -> float:
    """Percentage of exact label matches."""
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    if predicted.shape != actual.shape:
        raise ValueError("predicted and actual lengths differ")
    if actual.size == 0:
        raise ValueError("accuracy of an empty prediction set is undefined")
    return 100.0 * float(np.sum(predicted == actual)) / actual.size


@dataclass(frozen=True)
class Partition:
    train: np.ndarray
    test: np.ndarray
    label: str
    seed: int
    stratified: bool


def _strata(y):
    classes, inverse = np.unique(y, return_inverse=True)
    return [np.flatnonzero(inverse == c) for c in range(len(classes))]


def split(y, ratio, seed: int, stratified: bool = True) -> Partition:
    """Train/test partition of ``len(y)`` indices at a nominal ratio.

    Stratified mode shuffles each class separately and sends
    ``round(ratio * n_class)`` members (at least one, and at least one left
    over) to training.  A class with fewer than two members makes
    stratification impossible; the split then falls back to a plain shuffle
    with a warning.
    """
    key = parse_ratio(ratio)
    frac = RATIOS[key]
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    strata = _strata(y)
    if stratified and min(len(s) for s in strata) < 2:
        warnings.warn("a class has fewer than two members; using an unstratified split",
                      stacklevel=2)
        stratified = False
    if stratified:
        train, test = [], []
        for members in strata:
            shuffled = rng.permutation(members)
            n_train = min(max(int(round(frac * len(members))), 1), len(members) - 1)
            train.append(shuffled[:n_train])
            test.append(shuffled[n_train:])
        train, test = np.concatenate(train), np.concatenate(test)
    else:
        shuffled = rng.permutation(len(y))
        n_train = int(round(frac * len(y)))
        train, test = shuffled[:n_train], shuffled[n_train:]
    return Partition(np.sort(train), np.sort(test), key, seed, stratified)


def fold_assignment(y, k: int, seed: int, stratified: bool = True) -> np.ndarray:
    """Fold id per index; fold sizes differ by at most one.

    Stratified mode deals each shuffled class round-robin across folds, one
    class after another.
    """
    y = np.asarray(y)
    n = len(y)
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of records ({n})")
    rng = np.random.default_rng(seed)
    if stratified:
        order = np.concatenate([rng.permutation(s) for s in _strata(y)])
    else:
        order = rng.permutation(n)
    folds = np.empty(n, dtype=np.int64)
    folds[order] = np.arange(n) % k
    return folds


def kfold(y, k: int, seed: int, stratified: bool = True) -> list:
    folds = fold_assignment(y, k, seed, stratified)
    return [Partition(np.flatnonzero(folds != j), np.flatnonzero(folds == j), f"fold{j}",
                      seed, stratified) for j in range(k)]


@dataclass(frozen=True)
class ReportRow:
    model: str
    target: str
    ratio_or_fold: str
    accuracy_percent: float
    n_train: int
    n_test: int
    seed: int

    def as_csv(self) -> list:
        return [self.model, self.target, self.ratio_or_fold, repr(float(self.accuracy_percent)),
                self.n_train, self.n_test, self.seed]


@dataclass
class EvaluationReport:
    rows: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def models(self) -> list:
        return list(dict.fromkeys(r.model for r in self.rows))

    def targets(self) -> list:
        return list(dict.fromkeys(r.target for r in self.rows))

    def cell(self, model, target, label) -> float:
        for r in self.rows:
            if (r.model, r.target, r.ratio_or_fold) == (model, target, label):
                return r.accuracy_percent
        raise KeyError((model, target, label))

    def aggregates(self) -> dict:
        """``(model, target) -> (mean, sample sd, n)`` over all rows of that pair."""
        groups: dict = {}
        for r in self.rows:
            groups.setdefault((r.model, r.target), []).append(r.accuracy_percent)
        out = {}
        for key, values in groups.items():
            values = np.array(values)
            sd = float(values.std(ddof=1)) if len(values) > 1 else 0.0
            out[key] = (float(values.mean()), sd, len(values))
        return out

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(REPORT_COLUMNS)
            for row in self.rows:
                writer.writerow(row.as_csv())

    @classmethod
    def read_csv(cls, path) -> "EvaluationReport":
        with Path(path).open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
                raise ValueError(f"{path} is not an evaluation report")
            rows = [ReportRow(r["model"], r["target"], r["ratio_or_fold"],
                              float(r["accuracy_percent"]), int(r["n_train"]),
                              int(r["n_test"]), int(r["seed"])) for r in reader]
        return cls(rows)


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _with_seed(estimator, seed):
    est = clone(estimator)
    params = est.get_params()
    updates = {}
    if "random_state" in params:
        updates["random_state"] = seed
    if "n_jobs" in params:
        updates["n_jobs"] = 1
    return est.set_params(**updates)


def _run_cell(name, estimator, X, y, target, part, model_seed):
    est = _with_seed(estimator, model_seed)
    est.fit(X[part.train], y[part.train])
    acc = accuracy(est.predict(X[part.test]), y[part.test])
    return ReportRow(name, target.value, part.label, acc, len(part.train), len(part.test), part.seed)


def _run_cells(jobs, n_jobs):
    if n_jobs == 1:
        return [_run_cell(*job) for job in jobs]
    return list(Parallel(n_jobs=n_jobs)(delayed(_run_cell)(*job) for job in jobs))


def run_grid(dataset: Dataset, models: Mapping, targets: Sequence = BOTH_TARGETS,
             ratios: Sequence = tuple(RATIOS), seed: int = 0, n_jobs: int = 1,
             stratified: bool = True) -> EvaluationReport:
    """Train and test every (model, target, ratio) cell.

    ``models`` maps a short name to an unfitted estimator.  All models share
    the partition of a given (target, ratio) cell.  Rows come out model-major,
    then target, then ratio, whatever ``n_jobs`` is.
    """
    X = dataset.features()
    targets = [Target.parse(t) for t in targets]
    ratios = [parse_ratio(r) for r in ratios]
    partitions = {}
    for t_i, target in enumerate(targets):
        y = dataset.labels(target)
        for r_i, ratio in enumerate(ratios):
            partitions[target, ratio] = split(y, ratio, _derive_seed(seed, t_i, r_i), stratified)
    jobs = []
    for name, estimator in models.items():
        for target in targets:
            y = dataset.labels(target)
            for ratio in ratios:
                part = partitions[target, ratio]
                jobs.append((name, estimator, X, y, target, part, part.seed))
    return EvaluationReport(_run_cells(jobs, n_jobs))


def run_cv(dataset: Dataset, models: Mapping, targets: Sequence = BOTH_TARGETS, k: int = 10,
           seed: int = 0, n_jobs: int = 1, stratified: bool = True) -> EvaluationReport:
    """K-fold cross-validation of every model on every target."""
    X = dataset.features()
    targets = [Target.parse(t) for t in targets]
    folds = {}
    for t_i, target in enumerate(targets):
        folds[target] = kfold(dataset.labels(target), k, _derive_seed(seed, t_i), stratified)
    jobs = []
    for name, estimator in models.items():
        for target in targets:
            y = dataset.labels(target)
            for j, part in enumerate(folds[target]):
                jobs.append((name, estimator, X, y, target, part, _derive_seed(part.seed, j)))
    return EvaluationReport(_run_cells(jobs, n_jobs))


TARGET_TITLES = {"light": "Light Intensity", "distance": "Distance"}


def _format_table(header, body) -> str:
    widths = [max(len(str(row[i])) for row in [header] + body) for i in range(len(header))]
    lines = []
    for n, row in enumerate([header] + body):
        cells = [str(c).ljust(w) if i == 0 else str(c).rjust(w)
                 for i, (c, w) in enumerate(zip(row, widths))]
        lines.append("  ".join(cells).rstrip())
        if n == 0:
            lines.append("-" * len(lines[0]))
    return "\n".join(lines)


def grid_tables(report: EvaluationReport) -> str:
    """One table per target: models by rows, train-test ratios by columns."""
    blocks = []
    for target in report.targets():
        labels = list(dict.fromkeys(r.ratio_or_fold for r in report.rows if r.target == target))
        body = []
        for model in report.models():
            cells = []
            for label in labels:
                try:
                    cells.append(f"{report.cell(model, target, label):.2f}")
                except KeyError:
                    cells.append("-")
            body.append([DISPLAY_NAMES.get(model, model)] + cells)
        title = f"{TARGET_TITLES.get(target, target)}: accuracy (%) by training-testing partition"
        blocks.append(title + "\n" + _format_table(["Model"] + [f"{l}%" for l in labels], body))
    return "\n\n".join(blocks) + "\n"


def summary_table(report: EvaluationReport, ratio: str = SUMMARY_RATIO) -> str:
    """Accuracy per model and target at one partition ratio."""
    ratio = parse_ratio(ratio)
    targets = [t for t in ("distance", "light") if t in report.targets()]
    body = []
    for model in report.models():
        cells = []
        for target in targets:
            try:
                cells.append(f"{report.cell(model, target, ratio):.2f}")
            except KeyError:
                cells.append("-")
        body.append([DISPLAY_NAMES.get(model, model)] + cells)
    header = ["Model"] + [TARGET_TITLES[t] for t in targets]
    return f"Accuracy (%) at the {ratio} partition\n" + _format_table(header, body) + "\n"


def cv_table(report: EvaluationReport) -> str:
    """Per-fold accuracies with a mean and sample standard deviation column."""
    aggregates = report.aggregates()
    blocks = []
    for target in report.targets():
        labels = list(dict.fromkeys(r.ratio_or_fold for r in report.rows if r.target == target))
        body = []
        for model in report.models():
            mean, sd, _ = aggregates[model, target]
            cells = [f"{report.cell(model, target, l):.2f}" for l in labels]
            body.append([DISPLAY_NAMES.get(model, model)] + cells + [f"{mean:.2f} +/- {sd:.2f}"])
        title = f"{TARGET_TITLES.get(target, target)}: {len(labels)}-fold cross-validation accuracy (%)"
        blocks.append(title + "\n" + _format_table(["Model"] + labels + ["mean +/- sd"], body))
    return "\n\n".join(blocks) + "\n"
