"""Monte Carlo comparison of the IDP, MWW, BB-DP and 50/50 tests.

Each (delta, run) cell draws its data and Monte Carlo weights from streams
keyed by ``(seed, delta index, run index)``. Results therefore do not
depend on which tests are requested, on the order of evaluation, or on how
the cells are split into shards.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate, stats

from .baselines import bb_test, fifty_fifty
from .idp import DEFAULT_S, Approx, Outcome, TestConfig, idp_decide
from .ranks import TieMode, mww_test
from .streams import as_seed_sequence, child

__all__ = [
    "TestKind",
    "GaussianShift",
    "StudentTShift",
    "GaussianScale",
    "parse_generator",
    "ExperimentSpec",
    "CellResult",
    "ExperimentResult",
    "CSV_COLUMNS",
    "delta_grid",
    "loss_eval",
    "true_hypothesis",
    "run_experiment",
    "emit_tables",
    "load_json",
]

CSV_COLUMNS = ("delta", "test", "metric", "value", "runs", "seed")


class TestKind(str, enum.Enum):
    IDP = "IDP"
    MWW = "MWW"
    BBDP = "BBDP"
    FIFTY_FIFTY = "FiftyFifty"

    __test__ = False

    @classmethod
    def parse(cls, name: str) -> "TestKind":
        key = name.strip().lower().replace("-", "").replace("_", "").replace("/", "")
        aliases = {"idp": cls.IDP, "mww": cls.MWW, "bbdp": cls.BBDP, "bb": cls.BBDP,
                   "fiftyfifty": cls.FIFTY_FIFTY, "5050": cls.FIFTY_FIFTY}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown test {name!r}") from None


# --------------------------------------------------------------------------
# Data generators
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianShift:
    """X ~ N(0, 1), Y ~ N(delta, 1)."""

    def sample(self, n1, n2, delta, rng):
        return rng.standard_normal(n1), delta + rng.standard_normal(n2)

    def prob_x_le_y(self, delta: float) -> float:
        return float(stats.norm.cdf(delta / math.sqrt(2.0)))

    @property
    def label(self) -> str:
        return "gaussian-shift"


@dataclass(frozen=True)
class StudentTShift:
    """X ~ t(df), Y ~ delta + t(df)."""

    df: float = 3.0

    def __post_init__(self):
        if not (math.isfinite(self.df) and self.df > 0):
            raise ValueError("df must be positive")

    def sample(self, n1, n2, delta, rng):
        return rng.standard_t(self.df, n1), delta + rng.standard_t(self.df, n2)

    def prob_x_le_y(self, delta: float) -> float:
        t = stats.t(self.df)
        val, _ = integrate.quad(lambda v: t.cdf(v) * t.pdf(v - delta), -np.inf, np.inf)
        return float(val)

    @property
    def label(self) -> str:
        return f"student-t:{self.df:g}"


@dataclass(frozen=True)
class GaussianScale:
    """X ~ N(0, 1), Y ~ N(delta, sigma^2)."""

    sigma: float = 10.0

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError("sigma must be positive")

    def sample(self, n1, n2, delta, rng):
        return rng.standard_normal(n1), delta + self.sigma * rng.standard_normal(n2)

    def prob_x_le_y(self, delta: float) -> float:
        return float(stats.norm.cdf(delta / math.sqrt(1.0 + self.sigma**2)))

    @property
    def label(self) -> str:
        return f"gaussian-scale:{self.sigma:g}"


def parse_generator(text: str):
    """Parse ``gaussian-shift``, ``student-t:DF`` or ``gaussian-scale:SIGMA``."""
    name, _, arg = text.strip().lower().partition(":")
    try:
        if name == "gaussian-shift" and not arg:
            return GaussianShift()
        if name == "student-t":
            return StudentTShift(float(arg) if arg else 3.0)
        if name == "gaussian-scale":
            return GaussianScale(float(arg) if arg else 10.0)
    except ValueError as exc:
        raise ValueError(f"bad generator parameter in {text!r}: {exc}") from None
    raise ValueError(f"unknown generator {text!r}")


def true_hypothesis(generator, delta: float) -> bool:
    """Whether ``P(X <= Y) > 0.5`` under the generator.

    All generators are location families with a symmetric difference
    ``Y - X - delta``, so the hypothesis holds exactly when ``delta > 0``;
    at ``delta = 0`` ``P(X <= Y)`` is exactly 0.5 and the answer is False.
    """
    return delta > 0


def loss_eval(true_hyp: bool, action: bool, k0: float, k1: float) -> float:
    if k0 < 0 or k1 < 0:
        raise ValueError("loss weights must be non-negative")
    if true_hyp and not action:
        return float(k0)
    if action and not true_hyp:
        return float(k1)
    return 0.0


def delta_grid(delta_min: float, delta_max: float, steps: int) -> tuple[float, ...]:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if steps == 1:
        return (float(delta_min),)
    return tuple(round(float(v), 12) for v in np.linspace(delta_min, delta_max, steps))


# --------------------------------------------------------------------------
# Spec and results
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentSpec:
    delta_grid: tuple[float, ...]
    n1: int
    n2: int
    runs: int
    gamma: float = 0.05
    k0: float | None = None
    k1: float | None = None
    s: float = DEFAULT_S
    mc_samples: int = 4000
    seed: int = 0
    generator: object = field(default_factory=GaussianShift)
    tests: tuple[TestKind, ...] = tuple(TestKind)
    approx: Approx = Approx.MONTE_CARLO
    ties: TieMode = TieMode.MIDRANK
    mww_continuity: bool = False

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("delta_grid", tuple(float(d) for d in self.delta_grid))
        if isinstance(self.generator, str):
            set_("generator", parse_generator(self.generator))
        tests = [t if isinstance(t, TestKind) else TestKind.parse(str(t)) for t in self.tests]
        set_("tests", tuple(dict.fromkeys(tests)))
        set_("approx", Approx(self.approx))
        set_("ties", TieMode(self.ties))
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.k0 is None and self.k1 is None:
            set_("k0", 1.0)
            set_("k1", (1.0 - self.gamma) / self.gamma)
        elif self.k0 is None or self.k1 is None:
            raise ValueError("give both k0 and k1, or neither")
        if self.k0 < 0 or self.k1 < 0 or self.k0 + self.k1 <= 0:
            raise ValueError("k0, k1 must be non-negative with a positive sum")
        if abs(self.gamma - self.k0 / (self.k0 + self.k1)) >= 1e-12:
            raise ValueError("gamma must equal k0 / (k0 + k1)")
        if not self.delta_grid:
            raise ValueError("delta_grid must not be empty")
        if not all(math.isfinite(d) for d in self.delta_grid):
            raise ValueError("delta_grid values must be finite")
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("sample sizes must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not self.tests:
            raise ValueError("at least one test is required")
        # validates s, mc_samples and seed
        self.test_config()

    def test_config(self) -> TestConfig:
        return TestConfig(s=self.s, gamma=self.gamma, c=0.5, mc_samples=self.mc_samples,
                          seed=self.seed, ties=self.ties, approx=self.approx)

    def to_dict(self) -> dict:
        return {
            "delta_grid": list(self.delta_grid),
            "n1": self.n1,
            "n2": self.n2,
            "runs": self.runs,
            "gamma": self.gamma,
            "k0": self.k0,
            "k1": self.k1,
            "s": self.s,
            "mc_samples": self.mc_samples,
            "seed": self.seed,
            "generator": self.generator.label,
            "tests": [t.value for t in self.tests],
            "approx": self.approx.value,
            "ties": self.ties.value,
            "mww_continuity": self.mww_continuity,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        d["generator"] = parse_generator(d["generator"])
        d["tests"] = tuple(TestKind(t) for t in d["tests"])
        return cls(**d)


@dataclass(frozen=True)
class CellResult:
    delta: float
    test: TestKind
    truth: bool
    runs: int
    greater: int = 0
    not_greater: int = 0
    indeterminate: int = 0

    @property
    def accuracy(self) -> float:
        return (self.greater if self.truth else self.not_greater) / self.runs

    @property
    def error(self) -> float:
        return (self.not_greater if self.truth else self.greater) / self.runs

    @property
    def power(self) -> float:
        return self.greater / self.runs

    @property
    def indeterminacy(self) -> float:
        return self.indeterminate / self.runs

    def mean_loss(self, k0: float, k1: float) -> float:
        # indeterminate runs take no action and contribute no loss
        total = (loss_eval(self.truth, True, k0, k1) * self.greater
                 + loss_eval(self.truth, False, k0, k1) * self.not_greater)
        return total / self.runs

    def metrics(self, k0: float, k1: float) -> dict:
        out = {
            "accuracy": self.accuracy,
            "error": self.error,
            "power": self.power,
            "mean_loss": self.mean_loss(k0, k1),
        }
        if self.test is TestKind.IDP:
            out["indeterminacy"] = self.indeterminacy
            determinate = self.greater + self.not_greater
            if determinate:
                correct = self.greater if self.truth else self.not_greater
                out["accuracy_given_determinate"] = correct / determinate
        out["greater"] = self.greater
        out["not_greater"] = self.not_greater
        out["indeterminate"] = self.indeterminate
        return out


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    cells: tuple[CellResult, ...]

    def cell(self, delta: float, test: TestKind | str) -> CellResult:
        test = test if isinstance(test, TestKind) else TestKind.parse(test)
        for c in self.cells:
            if c.test is test and c.delta == delta:
                return c
        raise KeyError((delta, test))

    def metric(self, delta: float, test: TestKind | str, name: str) -> float:
        return self.cell(delta, test).metrics(self.spec.k0, self.spec.k1)[name]

    def rows(self, metrics: Iterable[str] | None = None) -> list[dict]:
        wanted = None if metrics is None else set(metrics)
        out = []
        for c in self.cells:
            for name, value in c.metrics(self.spec.k0, self.spec.k1).items():
                if wanted is None or name in wanted:
                    out.append({"delta": c.delta, "test": c.test.value, "metric": name,
                                "value": value, "runs": c.runs, "seed": self.spec.seed})
        return out


# --------------------------------------------------------------------------
# Runner
# --------------------------------------------------------------------------

_CODE = {Outcome.GREATER: 0, Outcome.NOT_GREATER: 1, Outcome.INDETERMINATE: 2}


def _run_cell(spec: ExperimentSpec, config: TestConfig, d_idx: int, r_idx: int) -> list[int]:
    """Outcome code for each requested test on one simulated data set."""
    run_seq = child(as_seed_sequence(spec.seed), d_idx, r_idx)
    data_rng = np.random.Generator(np.random.PCG64(child(run_seq, 0)))
    mc_seq = child(run_seq, 1)
    coin_rng = np.random.Generator(np.random.PCG64(child(run_seq, 2)))

    x, y = spec.generator.sample(spec.n1, spec.n2, spec.delta_grid[d_idx], data_rng)
    decision = None
    if TestKind.IDP in spec.tests or TestKind.FIFTY_FIFTY in spec.tests:
        decision = idp_decide(x, y, config, rng=mc_seq)

    codes = []
    for test in spec.tests:
        if test is TestKind.IDP:
            codes.append(_CODE[decision.outcome])
        elif test is TestKind.FIFTY_FIFTY:
            codes.append(0 if fifty_fifty(decision, coin_rng) else 1)
        elif test is TestKind.BBDP:
            bb = bb_test(x, y, spec.gamma, 0.5, spec.mc_samples, rng=mc_seq, ties=spec.ties)
            codes.append(0 if bb.decision else 1)
        else:
            mww = mww_test(x, y, spec.gamma, ties=spec.ties, continuity=spec.mww_continuity)
            codes.append(0 if mww.decision else 1)
    return codes


def _run_shard(spec: ExperimentSpec, tasks: Sequence[tuple[int, int]]) -> np.ndarray:
    config = spec.test_config()
    counts = np.zeros((len(spec.delta_grid), len(spec.tests), 3), dtype=np.int64)
    for d_idx, r_idx in tasks:
        for t_idx, code in enumerate(_run_cell(spec, config, d_idx, r_idx)):
            counts[d_idx, t_idx, code] += 1
    return counts


def run_experiment(spec: ExperimentSpec, shards: int = 1, workers: int = 1) -> ExperimentResult:
    """Run every (delta, run) cell and aggregate outcome counts per test.

    Cells are split into ``shards`` contiguous chunks; with ``workers > 1``
    the chunks run in a process pool. Counts are merged by summation, so the
    result is identical for any ``shards``/``workers`` combination.
    """
    if shards < 1 or workers < 1:
        raise ValueError("shards and workers must be >= 1")
    tasks = [(d, r) for d in range(len(spec.delta_grid)) for r in range(spec.runs)]
    bounds = np.linspace(0, len(tasks), shards + 1).astype(int)
    chunks = [tasks[bounds[i]:bounds[i + 1]] for i in range(shards)]

    if workers == 1:
        parts = [_run_shard(spec, chunk) for chunk in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_shard, [spec] * len(chunks), chunks))
    counts = np.sum(parts, axis=0)

    cells = []
    for d_idx, delta in enumerate(spec.delta_grid):
        truth = true_hypothesis(spec.generator, delta)
        for t_idx, test in enumerate(spec.tests):
            g, ng, ind = (int(v) for v in counts[d_idx, t_idx])
            cells.append(CellResult(delta, test, truth, spec.runs, g, ng, ind))
    return ExperimentResult(spec, tuple(cells))


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def emit_tables(result: ExperimentResult, format: str = "csv", metrics: Iterable[str] | None = None) -> str:
    """Serialize a result as ``delta,test,metric,value,runs,seed`` rows.

    JSON output carries the same rows plus the experiment spec, which makes
    it loadable again with :func:`load_json`.
    """
    fmt = format.lower()
    rows = result.rows(metrics)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row["delta"]), row["test"], row["metric"],
                             _fmt(row["value"]), row["runs"], row["seed"]])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps({"spec": result.spec.to_dict(), "rows": rows}, indent=2) + "\n"
    raise ValueError(f"unknown format {format!r}")


def load_json(text: str) -> ExperimentResult:
    payload = json.loads(text)
    spec = ExperimentSpec.from_dict(payload["spec"])
    counts: dict[tuple[float, str], dict] = {}
    runs: dict[tuple[float, str], int] = {}
    for row in payload["rows"]:
        key = (float(row["delta"]), row["test"])
        if row["metric"] in ("greater", "not_greater", "indeterminate"):
            counts.setdefault(key, {})[row["metric"]] = int(row["value"])
        runs[key] = int(row["runs"])
    cells = []
    for (delta, test), c in counts.items():
        cells.append(CellResult(delta, TestKind(test), true_hypothesis(spec.generator, delta),
                                runs[(delta, test)], c.get("greater", 0),
                                c.get("not_greater", 0), c.get("indeterminate", 0)))
    return ExperimentResult(spec, tuple(cells))
