import csv
import os

import numpy as np
import pytest

from beliefcal.data import Dataset, Standardization
from beliefcal.posterior import Posterior
from scipy import linalg

HERE = os.path.dirname(__file__)
ROOT = os.path.dirname(HERE)

UCI_HEADER = (["ID", "LIMIT_BAL", "SEX", "EDUCATION", "MARRIAGE", "AGE", "PAY_0"]
              + [f"PAY_{k}" for k in range(2, 7)]
              + [f"BILL_AMT{k}" for k in range(1, 7)]
              + [f"PAY_AMT{k}" for k in range(1, 7)]
              + ["default.payment.next.month"])


def synthetic_uci_rows(n, seed=0):
    """Credit-default-shaped table; default driven mostly by repayment delays."""
    rng = np.random.default_rng(seed)
    limit = rng.choice([10, 20, 50, 80, 100, 150, 200, 300, 500], size=n) * 1000.0
    sex = rng.choice([1, 2], size=n)
    education = rng.choice([1, 2, 3, 4], size=n, p=[0.35, 0.47, 0.16, 0.02])
    marriage = rng.choice([1, 2, 3], size=n, p=[0.45, 0.53, 0.02])
    age = np.clip(rng.normal(35, 9, size=n).round(), 21, 79)
    risk = rng.normal(size=n)
    pay = np.clip(np.round(risk[:, None] + rng.normal(scale=0.8, size=(n, 6)) - 0.3), -2, 8)
    util = np.clip(rng.beta(1.2, 2.5, size=(n, 1)) + rng.normal(scale=0.08, size=(n, 6)), -0.05, 1.1)
    bill = np.round(util * limit[:, None])
    paid = np.round(np.abs(bill) * rng.uniform(0, 0.3, size=(n, 6)))
    logit = -1.5 + 0.9 * risk + 0.4 * (pay[:, 0] > 0) - 0.3 * (limit / 1e5) + 0.2 * (education == 3)
    default = (rng.uniform(size=n) < 1 / (1 + np.exp(-logit))).astype(float)
    return np.column_stack([np.arange(1, n + 1), limit, sex, education, marriage, age, pay,
                            bill, paid, default])


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if not float(v).is_integer() else str(int(v)) for v in r])
    return str(path)


@pytest.fixture(scope="session")
def uci_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "uci_small.csv"
    return write_table(path, UCI_HEADER, synthetic_uci_rows(2000, seed=1))


def make_dataset(n, d, seed=0, actionable=None):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    w = rng.normal(size=d)
    y = np.where(X @ w + 0.5 * rng.normal(size=n) + 0.3 >= 0, 1.0, -1.0)
    if actionable is None:
        actionable = np.arange(d) % 2 == 0
    return Dataset(X, y, [f"f{i}" for i in range(d)], np.asarray(actionable, dtype=bool),
                   Standardization(np.zeros(d), np.ones(d)))


def make_posterior(A, w):
    A = np.asarray(A, dtype=float)
    L = linalg.cholesky(A, lower=True)
    vals, vecs = linalg.eigh(A)
    return Posterior(np.asarray(w, dtype=float), A, L, vals, vecs)


def random_spd(rng, d, floor=0.3):
    B = rng.normal(size=(d, d))
    return B @ B.T / d + floor * np.eye(d)


def credit_csv_path():
    """Location of the real credit table, if the user has provided it."""
    env = os.environ.get("BELIEFCAL_CREDIT_CSV")
    if env:
        return env
    path = os.path.join(ROOT, "data", "credit_processed.csv")
    return path if os.path.isfile(path) else None


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
