"""Tabular credit data: CSV parsing, label encoding, z-scoring and subsampling."""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed or inconsistent input tables."""


@dataclass(frozen=True)
class RawTable:
    header: list[str]
    rows: np.ndarray
    label_column: str

    def __post_init__(self):
        if self.label_column not in self.header:
            raise DataError(f"label column {self.label_column!r} missing from header")
        if self.rows.ndim != 2 or self.rows.shape[1] != len(self.header):
            raise DataError("row arity does not match header")

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def feature_columns(self) -> list[str]:
        return [c for c in self.header if c != self.label_column]

    @property
    def d_raw(self) -> int:
        return len(self.header) - 1

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.header.index(name)]

    def features(self) -> np.ndarray:
        keep = [i for i, c in enumerate(self.header) if c != self.label_column]
        return self.rows[:, keep]

    def drop(self, columns: Sequence[str]) -> "RawTable":
        missing = [c for c in columns if c not in self.header]
        if missing:
            raise DataError(f"cannot drop unknown columns {missing}")
        if self.label_column in columns:
            raise DataError("cannot drop the label column")
        keep = [i for i, c in enumerate(self.header) if c not in columns]
        return RawTable([self.header[i] for i in keep], self.rows[:, keep], self.label_column)


@dataclass(frozen=True)
class Standardization:
    mean: np.ndarray
    scale: np.ndarray

    def apply(self, features: np.ndarray) -> np.ndarray:
        return (features - self.mean) / self.scale


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: list[str]
    actionable: np.ndarray
    standardization: Standardization
    # original row ids, carried through subsampling
    index: np.ndarray = field(default=None)

    def __post_init__(self):
        n, d = self.X.shape
        if self.y.shape != (n,):
            raise DataError("label vector length does not match X")
        if not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise DataError("labels must be in {-1, +1}")
        if len(self.feature_names) != d or self.actionable.shape != (d,):
            raise DataError("feature metadata length does not match X")
        if self.index is None:
            object.__setattr__(self, "index", np.arange(n))
        for arr in (self.X, self.y, self.actionable, self.index):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def take(self, rows: np.ndarray) -> "Dataset":
        rows = np.asarray(rows)
        return replace(self, X=self.X[rows], y=self.y[rows], index=self.index[rows])


@dataclass(frozen=True)
class SubsampleSpec:
    size: int
    seed: int = 0

    def __post_init__(self):
        if self.size < 1:
            raise DataError("subsample size must be positive")


def load_csv(path, label_column: str) -> RawTable:
    """Parse a headed, comma-separated numeric table."""
    if not os.path.isfile(path):
        raise DataError(f"data file not found: {path}")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"empty data file: {path}") from None
        if label_column not in header:
            raise DataError(f"label column {label_column!r} missing from header of {path}")
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if not record or (len(record) == 1 and not record[0].strip()):
                continue
            if len(record) != len(header):
                raise DataError(
                    f"ragged row at line {lineno}: {len(record)} cells, expected {len(header)}"
                )
            try:
                rows.append([float(cell) for cell in record])
            except ValueError:
                for col, cell in enumerate(record):
                    try:
                        float(cell)
                    except ValueError:
                        raise DataError(
                            f"non-numeric cell {cell!r} at line {lineno}, column {header[col]!r}"
                        ) from None
    table = np.array(rows, dtype=float).reshape(len(rows), len(header))
    if not np.all(np.isfinite(table)):
        raise DataError(f"non-finite values in {path}")
    return RawTable(header, table, label_column)


def transform_labels(raw: RawTable, positive_value: float) -> np.ndarray:
    """Map the label column to {-1, +1}; ``positive_value`` (no default) becomes +1."""
    labels = raw.column(raw.label_column)
    values = np.unique(labels)
    if len(values) != 2:
        raise DataError(f"label column not binary: found {len(values)} distinct values")
    if positive_value not in values:
        raise DataError(f"positive value {positive_value} not present in label column")
    return np.where(labels == positive_value, 1.0, -1.0)


def standardize(features: np.ndarray, stats: Optional[Standardization] = None):
    """Z-score columns using population standard deviations.

    Returns ``(X, stats)``; pass ``stats`` back in to reuse a fitted scaling.
    """
    features = np.asarray(features, dtype=float)
    if stats is None:
        mean = features.mean(axis=0)
        scale = features.std(axis=0)
        flat = np.flatnonzero(~(scale > 0))
        if flat.size:
            raise DataError(f"zero variance in column(s) {flat.tolist()}")
        stats = Standardization(mean, scale)
    return stats.apply(features), stats


def subsample(ds: Dataset, spec: SubsampleSpec) -> Dataset:
    if spec.size > ds.n:
        raise DataError(f"subsample size {spec.size} exceeds dataset size {ds.n}")
    rng = np.random.default_rng(spec.seed)
    rows = np.sort(rng.choice(ds.n, size=spec.size, replace=False))
    return ds.take(rows)


# Credit-default derivation: the 23-column client table -> 17 engineered features.

UCI_CREDIT_LABEL = "NoDefaultNextMonth"

CREDIT_FEATURES = [
    "Married",
    "Single",
    "Age_lt_25",
    "Age_in_25_to_40",
    "Age_in_40_to_59",
    "Age_geq_60",
    "EducationLevel",
    "MaxBillAmountOverLast6Months",
    "MaxPaymentAmountOverLast6Months",
    "MonthsWithZeroBalanceOverLast6Months",
    "MonthsWithLowSpendingOverLast6Months",
    "MonthsWithHighSpendingOverLast6Months",
    "MostRecentBillAmount",
    "MostRecentPaymentAmount",
    "TotalOverdueCounts",
    "TotalMonthsOverdue",
    "HistoryOfOverduePayments",
]

CREDIT_ACTIONABLE = [
    "EducationLevel",
    "MaxBillAmountOverLast6Months",
    "MaxPaymentAmountOverLast6Months",
    "MonthsWithZeroBalanceOverLast6Months",
    "MonthsWithLowSpendingOverLast6Months",
    "MonthsWithHighSpendingOverLast6Months",
    "MostRecentBillAmount",
    "MostRecentPaymentAmount",
]


def _pick(raw: RawTable, *names: str) -> np.ndarray:
    for name in names:
        if name in raw.header:
            return raw.column(name)
    raise DataError(f"raw credit table lacks column {names[0]!r}")


def derive_credit_features(raw: RawTable) -> RawTable:
    """Engineer the 17 credit features from the raw client table.

    Accepts the Kaggle/UCI column names (``PAY_0`` or ``PAY_1`` for the most
    recent repayment status). The label column is rewritten so that 1 means
    no default next month.
    """
    pay = np.column_stack([_pick(raw, "PAY_0", "PAY_1")] + [_pick(raw, f"PAY_{k}") for k in range(2, 7)])
    bill = np.column_stack([_pick(raw, f"BILL_AMT{k}") for k in range(1, 7)])
    paid = np.column_stack([_pick(raw, f"PAY_AMT{k}") for k in range(1, 7)])
    limit = _pick(raw, "LIMIT_BAL")
    age = _pick(raw, "AGE")
    marriage = _pick(raw, "MARRIAGE")
    education = _pick(raw, "EDUCATION")

    # 1 = graduate school, 2 = university, 3 = high school, anything else = other
    level = np.select([education == 1, education == 2, education == 3], [3.0, 2.0, 1.0], 0.0)
    overdue = np.where(pay > 0, pay, 0.0)
    utilisation = bill / np.maximum(limit, 1.0)[:, None]

    columns = {
        "Married": marriage == 1,
        "Single": marriage == 2,
        "Age_lt_25": age < 25,
        "Age_in_25_to_40": (age >= 25) & (age < 40),
        "Age_in_40_to_59": (age >= 40) & (age < 60),
        "Age_geq_60": age >= 60,
        "EducationLevel": level,
        "MaxBillAmountOverLast6Months": bill.max(axis=1),
        "MaxPaymentAmountOverLast6Months": paid.max(axis=1),
        "MonthsWithZeroBalanceOverLast6Months": (bill <= 0).sum(axis=1),
        "MonthsWithLowSpendingOverLast6Months": (utilisation < 0.2).sum(axis=1),
        "MonthsWithHighSpendingOverLast6Months": (utilisation > 0.8).sum(axis=1),
        "MostRecentBillAmount": bill[:, 0],
        "MostRecentPaymentAmount": paid[:, 0],
        "TotalOverdueCounts": (pay > 0).sum(axis=1),
        "TotalMonthsOverdue": overdue.sum(axis=1),
        "HistoryOfOverduePayments": overdue.sum(axis=1) > 0,
    }
    default = raw.column(raw.label_column)
    rows = np.column_stack([np.asarray(columns[c], dtype=float) for c in CREDIT_FEATURES] + [1.0 - default])
    return RawTable(CREDIT_FEATURES + [UCI_CREDIT_LABEL], rows, UCI_CREDIT_LABEL)


@dataclass(frozen=True)
class Preprocessing:
    label_column: str
    positive_value: float = 1.0
    actionable: tuple = ()
    drop: tuple = ()
    derive: Optional[str] = None

    @classmethod
    def from_dict(cls, spec: dict) -> "Preprocessing":
        if "label_column" not in spec:
            raise KeyError("preprocessing.label_column is required")
        unknown = set(spec) - {"label_column", "positive_value", "actionable", "drop", "derive"}
        if unknown:
            raise KeyError(f"unknown preprocessing keys {sorted(unknown)}")
        derive = spec.get("derive")
        if derive not in (None, "uci_credit"):
            raise ValueError(f"unknown derivation {derive!r}")
        return cls(
            label_column=spec["label_column"],
            positive_value=float(spec.get("positive_value", 1.0)),
            actionable=tuple(spec.get("actionable", ())),
            drop=tuple(spec.get("drop", ())),
            derive=derive,
        )


def prepare(raw: RawTable, prep: Preprocessing) -> Dataset:
    """Raw table -> standardized Dataset according to a preprocessing config."""
    if prep.drop:
        raw = raw.drop(prep.drop)
    if prep.derive == "uci_credit":
        raw = derive_credit_features(raw)
    y = transform_labels(raw, prep.positive_value)
    names = raw.feature_columns
    unknown = [a for a in prep.actionable if a not in names]
    if unknown:
        raise DataError(f"actionable features not in table: {unknown}")
    X, stats = standardize(raw.features())
    actionable = np.array([name in prep.actionable for name in names])
    return Dataset(X, y, names, actionable, stats)
