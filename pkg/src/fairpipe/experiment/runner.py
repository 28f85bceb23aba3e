"""Three-phase experiment lifecycle.

Phase 1 fits every component on the training partition. Phase 2 scores
the validation partition, fits post-processing there and lets the model
selector choose among candidates. Phase 3 releases the test partition
once and applies the frozen pipeline to it. Components never receive the
test partition themselves; the runner applies frozen transforms for them.
"""

from __future__ import annotations

import dataclasses
import hashlib
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from fairpipe.errors import DegenerateLabels, FairpipeError, LifecycleError, SelectorOutOfRange
from fairpipe.experiment.audit import PARTITIONS, Trace
from fairpipe.experiment.config import ExperimentConfig
from fairpipe.experiment.seeding import component_seeds, derive_seed
from fairpipe.experiment.selectors import ModelSelector, make_selector
from fairpipe.fairness import (
    apply_calibrated_eq_odds,
    apply_reject_option,
    apply_repair,
    apply_reweighing,
    fit_calibrated_eq_odds,
    fit_di_remover,
    fit_reject_option,
    fit_reweighing,
)
from fairpipe.learn import get_learner, grid_search_cv
from fairpipe.metrics import MetricsReport, evaluate_subsets
from fairpipe.preprocess import apply_scaler, fit_imputer, fit_scaler, handle_missing, resample
from fairpipe.registry import load_dataset
from fairpipe.tabular import Dataset, EncodedMatrix, apply_encoder, fit_one_hot_encoder, split

FIT, SELECT, TEST = 1, 2, 3


@dataclass(frozen=True, eq=False)
class FrozenPipeline:
    """Train-fitted transforms, applied unchanged to validation and test."""

    imputer: object
    repairer: object
    encoder: object
    scaler: object
    reweighing: object


@dataclass(frozen=True, eq=False)
class CandidateOutcome:
    """One trained model with its post-processing rule and non-test metrics."""

    index: int
    params: dict
    model: object
    post_rule: object
    train_reports: tuple
    validation_reports: tuple
    cv: object
    degenerate: bool = False

    @property
    def train_report(self) -> MetricsReport:
        return self.train_reports[0]

    @property
    def validation_report(self) -> MetricsReport:
        return self.validation_reports[0]


@dataclass(frozen=True, eq=False)
class Predictions:
    row_ids: np.ndarray
    scores: np.ndarray
    labels: np.ndarray


@dataclass(frozen=True, eq=False)
class RunOutcome:
    run_id: str
    config: ExperimentConfig
    seed: int
    component_seeds: dict
    partition_sizes: tuple
    pipeline: FrozenPipeline
    candidates: tuple
    selected: int
    selector_id: str
    test_reports: tuple
    test_predictions: Predictions
    n_test_rows: int
    trace: Trace
    timings: dict = field(default_factory=dict)
    dataset_digest: str | None = None

    @property
    def chosen(self) -> CandidateOutcome:
        return self.candidates[self.selected]

    @property
    def test_report(self) -> MetricsReport:
        return self.test_reports[0]


@dataclass(frozen=True)
class RunFailure:
    config: ExperimentConfig
    seed: int
    step: str
    error: str

    @property
    def run_id(self) -> str:
        return make_run_id(self.config, self.seed)


def make_run_id(config: ExperimentConfig, seed: int) -> str:
    return f"{config.name}-{config.digest()[:10]}-s{seed}"


class Experiment:
    """Executes one (config, seed) run; step methods are the overridable components.

    Every ``*_step`` method routes the data it hands a component through
    :meth:`_call`, which records the access in the trace and wraps errors
    with the step name.
    """

    def __init__(self, config: ExperimentConfig, seed: int, data: Dataset, selector: ModelSelector | None = None):
        self.config = config
        self.seed = int(seed)
        self.data = data
        self.selector = selector or make_selector(config.selector.kind, config.selector.epsilon)
        self.seeds = component_seeds(self.seed)
        self.trace = Trace()
        self.phase = 0
        self._split = None

    # -- plumbing -------------------------------------------------------------

    def _call(self, step: str, action: str, fn, *datas):
        self.trace.record(self.phase, step, action, *datas)
        try:
            return fn(*datas)
        except LifecycleError:
            raise
        except (FairpipeError, ValueError, ArithmeticError) as exc:
            raise LifecycleError(step, exc) from exc

    def _release(self, partition: str) -> Dataset:
        data = getattr(self._split, partition)
        self.trace.record(self.phase, f"release_{partition}", "read", data)
        return data

    # -- phase 1 components --------------------------------------------------------

    def split_step(self):
        try:
            bundle = split(self.data, self.config.fractions, self.seeds["split"])
        except FairpipeError as exc:
            raise LifecycleError("split", exc) from exc
        partition_of = np.full(len(self.data), -1, dtype=np.int8)
        for code, name in enumerate(PARTITIONS):
            partition_of[getattr(bundle, name).row_ids] = code
        self.trace.partition_of = partition_of
        return bundle

    def resample_step(self, train: Dataset) -> Dataset:
        return self._call("resample", "apply", lambda d: resample(d, self.config.resampler, self.seeds["resample"]), train)

    def fit_imputer_step(self, train: Dataset):
        imp = self.config.imputer
        return self._call(
            "fit_imputer", "fit", lambda d: fit_imputer(imp.kind, d, imp.target_columns, self.seeds["imputer"]), train
        )

    def fit_repair_step(self, train: Dataset):
        pre = self.config.pre_intervention
        if pre.kind != "di_remover":
            return None
        return self._call("fit_di_remover", "fit", lambda d: fit_di_remover(d, pre.repair_level), train)

    def fit_encoder_step(self, train: Dataset):
        return self._call(
            "fit_encoder", "fit", lambda d: fit_one_hot_encoder(d, include_protected=self.config.protected_as_feature), train
        )

    def fit_scaler_step(self, train: EncodedMatrix):
        return self._call("fit_scaler", "fit", lambda m: fit_scaler(self.config.scaler, m), train)

    def fit_reweighing_step(self, train: Dataset):
        if self.config.pre_intervention.kind != "reweighing":
            return None
        return self._call("fit_reweighing", "fit", fit_reweighing, train)

    def train_learner_step(self, X: EncodedMatrix, y: np.ndarray, w: np.ndarray) -> list[tuple[dict, object, object]]:
        """Return ``(params, model, cv_result)`` per candidate, best CV candidate first."""
        lc = self.config.learner
        spec = get_learner(lc.kind)
        seed = self.seeds["learner"]

        def fit(m):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateLabels)
                if lc.tuning == "untuned":
                    params = {**spec.untuned, **(lc.params or {})}
                    return [(params, spec.fit(m.values, y, w, seed, **params), None)]
                grid = lc.grid if lc.grid is not None else spec.default_grid
                model, cv = grid_search_cv(spec, grid, lc.cv_folds, m.values, y, w, seed)
                out = [(cv.best_params, model, cv)]
                for i in cv.ranking()[: lc.candidates]:
                    if i != cv.best_index and len(out) < lc.candidates:
                        params = dict(cv.candidates[i])
                        out.append((params, spec.fit(m.values, y, w, seed, **params), cv))
                return out

        return self._call("train_learner", "fit", fit, X)

    # -- phase 2 components -------------------------------------------------------

    def fit_post_step(self, scores: np.ndarray, val: EncodedMatrix, labels: np.ndarray):
        post = self.config.post_intervention
        if post.kind == "reject_option":
            fn = lambda m: fit_reject_option(scores, labels, m.group, post.objective)  # noqa: E731
        elif post.kind == "calibrated_eq_odds":
            fn = lambda m: fit_calibrated_eq_odds(scores, labels, m.group, post.cost)  # noqa: E731
        else:
            return None
        return self._call("fit_post_intervention", "fit", fn, val)

    # -- shared application of frozen transforms -------------------------------------

    def transform(self, pipe: FrozenPipeline, data: Dataset, step: str) -> tuple[Dataset, EncodedMatrix]:
        data = self._call(f"impute_{step}", "apply", lambda d: handle_missing(pipe.imputer, d), data)
        if pipe.repairer is not None:
            data = self._call(f"repair_{step}", "apply", lambda d: apply_repair(pipe.repairer, d), data)
        enc = self._call(f"encode_{step}", "apply", lambda d: apply_encoder(pipe.encoder, d), data)
        enc = self._call(f"scale_{step}", "apply", lambda m: apply_scaler(pipe.scaler, m), enc)
        return data, enc

    def predict(self, model, post_rule, enc: EncodedMatrix, partition: str) -> tuple[np.ndarray, np.ndarray]:
        scores = self._call(f"predict_{partition}", "predict", lambda m: model.predict_scores(m.values), enc)
        if post_rule is None:
            return scores, (scores >= 0.5).astype(np.int8)
        kind = self.config.post_intervention.kind
        if kind == "reject_option":
            labels = self._call(
                f"post_{partition}", "apply", lambda m: apply_reject_option(post_rule, scores, m.group), enc
            )
            return scores, labels
        seed = derive_seed(self.seeds["post_intervention"], partition)
        return self._call(
            f"post_{partition}", "apply", lambda m: apply_calibrated_eq_odds(post_rule, scores, m.group, seed), enc
        )

    def _reports(self, data: Dataset, labels, partition: str) -> tuple:
        fav = data.groups.favorable_label
        return tuple(
            evaluate_subsets(data.labels, labels, data.group_index, data.imputed_flag, data.weights, partition, fav)
        )

    # -- lifecycle -----------------------------------------------------------------

    def run(self) -> RunOutcome:
        timings = {}
        t0 = time.perf_counter()

        # phase 1: fit on train
        self.phase = FIT
        self._split = self.split_step()
        train = self._release("train")
        train = self.resample_step(train)
        imputer = self.fit_imputer_step(train)
        train = self._call("impute_train", "apply", lambda d: handle_missing(imputer, d), train)
        repairer = self.fit_repair_step(train)
        if repairer is not None:
            train = self._call("repair_train", "apply", lambda d: apply_repair(repairer, d), train)
        encoder = self.fit_encoder_step(train)
        enc_train = self._call("encode_train", "apply", lambda d: apply_encoder(encoder, d), train)
        scaler = self.fit_scaler_step(enc_train)
        enc_train = self._call("scale_train", "apply", lambda m: apply_scaler(scaler, m), enc_train)
        rw = self.fit_reweighing_step(train)
        if rw is not None:
            train = self._call("reweigh_train", "apply", lambda d: apply_reweighing(rw, d), train)
        pipe = FrozenPipeline(imputer, repairer, encoder, scaler, rw)
        trained = self.train_learner_step(enc_train, train.labels, train.weights)
        timings["phase1"] = time.perf_counter() - t0

        # phase 2: score validation, fit post-processing, select
        t1 = time.perf_counter()
        self.phase = SELECT
        val = self._release("validation")
        val, enc_val = self.transform(pipe, val, "validation")
        candidates = []
        for i, (params, model, cv) in enumerate(trained):
            val_scores = self._call("predict_validation", "predict", lambda m: model.predict_scores(m.values), enc_val)
            rule = self.fit_post_step(val_scores, enc_val, val.labels)
            _, train_labels = self.predict(model, rule, enc_train, "train")
            _, val_labels = self.predict(model, rule, enc_val, "validation")
            candidates.append(
                CandidateOutcome(
                    index=i,
                    params=dict(params),
                    model=model,
                    post_rule=rule,
                    train_reports=self._reports(train, train_labels, "train"),
                    validation_reports=self._reports(val, val_labels, "validation"),
                    cv=cv,
                    degenerate=bool(getattr(model, "degenerate", False)),
                )
            )
        eligible = [c for c in candidates if not c.degenerate]
        if not eligible:
            raise LifecycleError("select", FairpipeError("every candidate is degenerate (single-class training labels)"))
        self.trace.record(self.phase, "select", "select")
        choice = self.selector(eligible)
        if not isinstance(choice, (int, np.integer)) or not 0 <= choice < len(eligible):
            raise SelectorOutOfRange(f"selector {self.selector.id!r} returned {choice!r} for {len(eligible)} candidates")
        chosen = eligible[int(choice)]
        timings["phase2"] = time.perf_counter() - t1

        # phase 3: the frozen pipeline meets the test partition once
        t2 = time.perf_counter()
        self.phase = TEST
        test = self._release("test")
        n_test = len(test)
        test, enc_test = self.transform(pipe, test, "test")
        scores, labels = self.predict(chosen.model, chosen.post_rule, enc_test, "test")
        test_reports = self._reports(test, labels, "test")
        timings["phase3"] = time.perf_counter() - t2

        sizes = tuple(len(getattr(self._split, p)) for p in PARTITIONS)
        return RunOutcome(
            run_id=make_run_id(self.config, self.seed),
            config=self.config,
            seed=self.seed,
            component_seeds=dict(self.seeds),
            partition_sizes=sizes,
            pipeline=pipe,
            candidates=tuple(candidates),
            selected=chosen.index,
            selector_id=self.selector.id,
            test_reports=test_reports,
            test_predictions=Predictions(test.row_ids, scores, labels),
            n_test_rows=n_test,
            trace=self.trace,
            timings=timings,
        )


def _dataset_key(ref) -> str:
    return ref if isinstance(ref, str) else hashlib.sha256(repr(sorted(ref.items())).encode()).hexdigest()


def run(config: ExperimentConfig, seed: int, data: Dataset | None = None, data_dir=None,
        selector: ModelSelector | None = None) -> RunOutcome:
    """Execute one run. ``data`` defaults to loading ``config.dataset`` from ``data_dir``."""
    if data is None:
        data = load_dataset(config.dataset, data_dir)
    return Experiment(config, seed, data, selector).run()


def run_matrix(cells, data_dir=None, parallel: int = 1, datasets: dict | None = None, progress=None) -> list:
    """Run ``(config, seed)`` pairs in order; failures become :class:`RunFailure` entries.

    Datasets are loaded once per reference and shared (they are immutable).
    With ``parallel > 1`` runs execute on a thread pool; output order is the
    input order regardless.
    """
    cells = list(cells)
    cache = dict(datasets or {})
    for cfg, _ in cells:
        key = _dataset_key(cfg.dataset)
        if key not in cache:
            cache[key] = load_dataset(cfg.dataset, data_dir)

    def one(cell):
        cfg, seed = cell
        try:
            out = run(cfg, seed, cache[_dataset_key(cfg.dataset)])
        except LifecycleError as exc:
            out = RunFailure(cfg, seed, exc.step, str(exc))
        except FairpipeError as exc:
            out = RunFailure(cfg, seed, "select", f"{type(exc).__name__}: {exc}")
        if progress is not None:
            progress(out)
        return out

    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(one, cells))
    return [one(c) for c in cells]


def replace_config(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return dataclasses.replace(cfg, **changes)
