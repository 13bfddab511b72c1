"""JSON run configuration."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Optional

from .calibrate import DEFAULT_BETAS, DEFAULT_LAMBDAS, DEFAULT_SIGMAS, BeliefGrid
from .context import AVERAGING, KINDS, OBJECTIVES, ContextSpec, actionable_context
from .data import Dataset, Preprocessing, SubsampleSpec, load_csv, prepare, subsample
from .posterior import add_intercept

OUTPUT_ENV = "BELIEFCAL_OUTPUT_DIR"
TOP_KEYS = {"data", "preprocessing", "grid", "context", "objectives", "subsample", "output_dir", "seed"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    data_path: str
    preprocessing: Preprocessing
    grid: BeliefGrid
    context: dict
    objectives: tuple
    subsample: Optional[SubsampleSpec]
    output_dir: str
    seed: int = 0

    @classmethod
    def from_dict(cls, doc: dict, base_dir: str = ".") -> "RunConfig":
        try:
            return cls._parse(doc, base_dir)
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(str(err).strip("'\"")) from None

    @classmethod
    def _parse(cls, doc, base_dir):
        unknown = set(doc) - TOP_KEYS
        if unknown:
            raise KeyError(f"unknown config keys {sorted(unknown)}")
        if "data" not in doc or "preprocessing" not in doc:
            raise KeyError("config needs 'data' and 'preprocessing'")

        context = dict(doc.get("context", {}))
        context.setdefault("kind", "plain")
        if context["kind"] not in KINDS:
            raise ValueError(f"unknown context kind {context['kind']!r}")
        bad = set(context) - {"kind", "nonactionable_weight", "tn_floor", "average_over"}
        if bad:
            raise KeyError(f"unknown context keys {sorted(bad)}")
        context.setdefault("nonactionable_weight", 100.0)
        context.setdefault("tn_floor", None)
        context.setdefault("average_over", "n")
        if context["average_over"] not in AVERAGING:
            raise ValueError(f"average_over must be one of {list(AVERAGING)}")
        if context["tn_floor"] is not None and float(context["tn_floor"]) < 0:
            raise ValueError("tn_floor must be nonnegative")
        if not float(context["nonactionable_weight"]) > 0:
            raise ValueError("nonactionable_weight must be positive")

        g = doc.get("grid", {})
        default_betas = DEFAULT_BETAS if context["kind"] == "policy" else (0.0,)
        grid = BeliefGrid(
            tuple(g.get("sigmas", DEFAULT_SIGMAS)),
            tuple(g.get("lambdas", DEFAULT_LAMBDAS)),
            tuple(g.get("betas", default_betas)),
        )

        objectives = tuple(doc.get("objectives", ("avg_cost", "neg_log_prob")))
        if not objectives:
            raise ValueError("objectives list is empty")
        for name in objectives:
            if name not in OBJECTIVES:
                raise ValueError(f"unknown objective {name!r} (known: {', '.join(OBJECTIVES)})")

        seed = int(doc.get("seed", 0))
        sub = doc.get("subsample")
        if sub is not None:
            sub = SubsampleSpec(int(sub["size"]), int(sub.get("seed", seed)))

        data = doc["data"]
        if not os.path.isabs(data):
            data = os.path.normpath(os.path.join(base_dir, data))
        out = doc.get("output_dir", "out")
        if not os.path.isabs(out):
            out = os.path.normpath(os.path.join(base_dir, out))
        return cls(data, Preprocessing.from_dict(doc["preprocessing"]), grid, context,
                   objectives, sub, out, seed)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid JSON in {path}: {err}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(doc, os.path.dirname(os.path.abspath(path)))

    @property
    def resolved_output_dir(self) -> str:
        return os.environ.get(OUTPUT_ENV) or self.output_dir

    def load_dataset(self) -> Dataset:
        """Load, standardize, optionally subsample, and append the intercept."""
        raw = load_csv(self.data_path, self.preprocessing.label_column)
        ds = prepare(raw, self.preprocessing)
        if self.subsample is not None:
            ds = subsample(ds, self.subsample)
        return add_intercept(ds)

    def context_for(self, ds: Dataset) -> ContextSpec:
        c = self.context
        kw = dict(tn_floor=c["tn_floor"], average_over=c["average_over"])
        if c["kind"] == "actionable":
            return actionable_context(ds, float(c["nonactionable_weight"]), **kw)
        beta = self.grid.betas[0] if c["kind"] == "policy" else None
        return ContextSpec(kind=c["kind"], beta=beta, **kw)
