"""JSON run configuration.

Sections (all optional)::

    {
      "universe":   {"include": [...], "exclude": {"SYM": "reason"},
                     "trim_first_year": true, "min_history_days": 0},
      "experiment": {"iters": 1000, "seed": 0, "size_range": [1, 14]},
      "fit":        {"sizes": [2, 13], "max_iterations": 500, "tolerance": 1e-10,
                     "weighted": false},
      "test":       {"included_sizes": [2, 13]}
    }

Size ranges are inclusive ``[lo, hi]`` pairs.
"""

from dataclasses import dataclass, field
import json

from .errors import ValidationError
from .experiment import ExperimentConfig
from .ingest import UniverseConfig


@dataclass(frozen=True)
class FitConfig:
    sizes: tuple = None
    max_iterations: int = 500
    tolerance: float = 1e-10
    weighted: bool = False

    def size_range(self):
        return None if self.sizes is None else range(self.sizes[0], self.sizes[1] + 1)


@dataclass(frozen=True)
class TestConfig:
    included_sizes: tuple = None

    def size_range(self):
        if self.included_sizes is None:
            return None
        return range(self.included_sizes[0], self.included_sizes[1] + 1)

    __test__ = False


@dataclass(frozen=True)
class RunConfig:
    universe: UniverseConfig = field(default_factory=UniverseConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    test: TestConfig = field(default_factory=TestConfig)


_KNOWN = {
    "universe": {"include", "exclude", "trim_first_year", "min_history_days"},
    "experiment": {"iters", "seed", "size_range"},
    "fit": {"sizes", "max_iterations", "tolerance", "weighted"},
    "test": {"included_sizes"},
}


def _pair(value, what):
    if value is None:
        return None
    try:
        lo, hi = (int(v) for v in value)
    except (TypeError, ValueError):
        raise ValidationError(f"{what} must be an inclusive [lo, hi] pair, got {value!r}") from None
    if lo > hi:
        raise ValidationError(f"{what} has lo > hi: {value!r}")
    return lo, hi


def config_from_dict(doc):
    if not isinstance(doc, dict):
        raise ValidationError("configuration must be a JSON object")
    for section, body in doc.items():
        if section not in _KNOWN:
            raise ValidationError(f"unknown configuration section {section!r}")
        if not isinstance(body, dict):
            raise ValidationError(f"section {section!r} must be an object")
        unknown = set(body) - _KNOWN[section]
        if unknown:
            raise ValidationError(f"unknown keys in {section!r}: {sorted(unknown)}")
    u = doc.get("universe", {})
    e = doc.get("experiment", {})
    f = doc.get("fit", {})
    t = doc.get("test", {})
    return RunConfig(
        universe=UniverseConfig(
            include=u.get("include"),
            exclude=u.get("exclude", {}),
            trim_first_year=bool(u.get("trim_first_year", False)),
            min_history_days=int(u.get("min_history_days", 0)),
        ),
        experiment=ExperimentConfig(
            n_iter=int(e.get("iters", 1000)),
            seed=int(e.get("seed", 0)),
            size_range=_pair(e.get("size_range"), "experiment.size_range"),
        ),
        fit=FitConfig(
            sizes=_pair(f.get("sizes"), "fit.sizes"),
            max_iterations=int(f.get("max_iterations", 500)),
            tolerance=float(f.get("tolerance", 1e-10)),
            weighted=bool(f.get("weighted", False)),
        ),
        test=TestConfig(included_sizes=_pair(t.get("included_sizes"), "test.included_sizes")),
    )


def load_config(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc}") from None
    return config_from_dict(doc)
