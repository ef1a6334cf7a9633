"""Named pipeline presets, the end-to-end runner, and comparison reporting.

The five presets cross two filter selectors with two classifier families:

    BASE  no selection            + MLP,  batch 20, 10 epochs
    FS1   correlation(0.65)       + MLP,  batch 20, 20 epochs
    FS2   mutual information(11)  + MLP,  batch 20, 20 epochs
    FS3   correlation(0.65)       + LSTM, batch 32, 50 epochs
    FS4   mutual information(11)  + LSTM, batch 32, 50 epochs
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import DataError, NumericError
from .evaluate import Metrics, PhaseTimer, confusion, metrics
from .feature_select import (
    CORRELATION,
    MUTUAL_INFORMATION,
    NO_SELECTION,
    SelectedFeatures,
    correlation_filter,
    identity_selection,
    mi_rank_select,
)
from .flow_data import FlowDataset, atomic_write_text, drop_columns, select_features, stratified_split
from .neuralnet import (
    EpochStats,
    TrainingConfig,
    build_lstm,
    build_mlp,
    predict,
    save_model,
    train,
)
from .preprocess import SmoteConfig, apply_scaler, fit_scaler, smote_resample

# Published full-scale reference points for the preset suite (accuracy as a
# fraction, training time in seconds, selected feature count).
REFERENCE_RESULTS = {
    "FS1": {"accuracy": 0.9853, "train_seconds": 1029, "features": 9},
    "FS2": {"accuracy": 0.9999, "train_seconds": 944, "features": 11},
    "FS3": {"accuracy": 0.9989, "train_seconds": 2395, "features": 13},
    "FS4": {"accuracy": 0.9984, "train_seconds": 2601, "features": 11},
}


@dataclass(frozen=True)
class SelectorSpec:
    method: str  # none | correlation | mutual_information
    threshold: float | None = None
    k: int | None = None

    def __post_init__(self) -> None:
        if self.method == CORRELATION:
            if self.threshold is None:
                raise ValueError("correlation selector needs a threshold")
        elif self.method == MUTUAL_INFORMATION:
            if self.k is None:
                raise ValueError("mutual_information selector needs k")
        elif self.method != NO_SELECTION:
            raise ValueError(f"unknown selector method: {self.method!r}")

    def describe(self) -> str:
        if self.method == CORRELATION:
            return f"correlation(threshold={self.threshold})"
        if self.method == MUTUAL_INFORMATION:
            return f"mutual_information(k={self.k})"
        return "none"


@dataclass
class ExperimentConfig:
    name: str
    selector: SelectorSpec
    classifier: str  # mlp | lstm
    training: TrainingConfig
    smote: SmoteConfig
    split_fraction: float = 0.2
    seed: int = 0
    smote_before_split: bool = False  # literal pipeline: resample, then split
    select_before_smote: bool = False  # fit the selector on pre-SMOTE train rows
    smote_on_scaled: bool = False  # SMOTE distances in standardized space

    def __post_init__(self) -> None:
        if self.classifier not in ("mlp", "lstm"):
            raise ValueError(f"unknown classifier: {self.classifier!r}")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError("split_fraction must be in (0, 1)")
        if self.smote_before_split and (self.select_before_smote or self.smote_on_scaled):
            raise ValueError(
                "smote_before_split cannot be combined with select_before_smote "
                "or smote_on_scaled"
            )

    def to_dict(self) -> dict:
        return asdict(self)


# name -> (selector, classifier, batch_size, epochs); frozen per preset.
_PRESETS = {
    "BASE": (SelectorSpec(NO_SELECTION), "mlp", 20, 10),
    "FS1": (SelectorSpec(CORRELATION, threshold=0.65), "mlp", 20, 20),
    "FS2": (SelectorSpec(MUTUAL_INFORMATION, k=11), "mlp", 20, 20),
    "FS3": (SelectorSpec(CORRELATION, threshold=0.65), "lstm", 32, 50),
    "FS4": (SelectorSpec(MUTUAL_INFORMATION, k=11), "lstm", 32, 50),
}

PRESET_NAMES = tuple(_PRESETS)


def preset(
    name: str,
    seed: int,
    split_fraction: float = 0.2,
    smote_k: int = 5,
    smote_before_split: bool = False,
    select_before_smote: bool = False,
    smote_on_scaled: bool = False,
    selector: SelectorSpec | None = None,
    classifier: str | None = None,
    batch_size: int | None = None,
    epochs: int | None = None,
    learning_rate: float = 1e-3,
) -> ExperimentConfig:
    """Build a named preset configuration.

    Overriding any frozen preset hyperparameter (selector, classifier, batch
    size, epochs) reclassifies the config as `custom`. Sub-seeds are derived
    from the experiment seed: SMOTE uses seed+1, training shuffles use seed+2,
    and weight initialization uses seed+3.
    """
    if name not in _PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {list(_PRESETS)}")
    frozen_selector, frozen_classifier, frozen_batch, frozen_epochs = _PRESETS[name]
    resolved_selector = selector if selector is not None else frozen_selector
    resolved_classifier = classifier if classifier is not None else frozen_classifier
    resolved_batch = batch_size if batch_size is not None else frozen_batch
    resolved_epochs = epochs if epochs is not None else frozen_epochs
    overridden = (
        resolved_selector != frozen_selector
        or resolved_classifier != frozen_classifier
        or resolved_batch != frozen_batch
        or resolved_epochs != frozen_epochs
    )
    return ExperimentConfig(
        name="custom" if overridden else name,
        selector=resolved_selector,
        classifier=resolved_classifier,
        training=TrainingConfig(
            epochs=resolved_epochs,
            batch_size=resolved_batch,
            learning_rate=learning_rate,
            seed=seed + 2,
        ),
        smote=SmoteConfig(k_neighbors=smote_k, seed=seed + 1),
        split_fraction=split_fraction,
        seed=seed,
        smote_before_split=smote_before_split,
        select_before_smote=select_before_smote,
        smote_on_scaled=smote_on_scaled,
    )


@dataclass
class ExperimentReport:
    config: dict
    provenance: dict
    selection: SelectedFeatures
    metrics: Metrics
    history: list[EpochStats]
    phase_seconds: dict[str, float]
    metrics_split: str = "test"
    model_path: str | None = None

    @property
    def feature_count(self) -> int:
        return len(self.selection.kept)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "provenance": self.provenance,
            "selection": self.selection.to_dict(),
            "metrics": self.metrics.to_dict(),
            "history": [{"loss": h.loss, "seconds": h.seconds} for h in self.history],
            "phase_seconds": dict(self.phase_seconds),
            "metrics_split": self.metrics_split,
            "model_path": self.model_path,
            "feature_count": self.feature_count,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def save_report(report: ExperimentReport, path) -> None:
    atomic_write_text(path, report.to_json() + "\n")


def load_report(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: bad report file: {exc}") from exc


def _stage(name: str, thunk):
    try:
        return thunk()
    except (DataError, NumericError) as exc:
        raise type(exc)(f"{name}: {exc}") from exc


def _fit_selection(cfg: ExperimentConfig, train_ds: FlowDataset) -> SelectedFeatures:
    if cfg.selector.method == CORRELATION:
        return correlation_filter(train_ds, cfg.selector.threshold)
    if cfg.selector.method == MUTUAL_INFORMATION:
        return mi_rank_select(train_ds, cfg.selector.k)
    return identity_selection(train_ds)


def run_experiment(
    cfg: ExperimentConfig,
    ds: FlowDataset,
    source: str = "<memory>",
    model_path: str | None = None,
) -> ExperimentReport:
    """Run one full pipeline and return its report.

    Stage order: drop remaining string columns, stratified split, SMOTE on
    the training rows, standard scaling fitted on the training rows, feature
    selection fitted on the training rows, classifier training, evaluation on
    the held-out test rows. Scaler and selector never see test rows (unless
    smote_before_split reproduces the literal leaky pipeline). Deterministic
    given cfg and the dataset bytes; only wall times vary.
    """
    if ds.labels is None:
        raise DataError("run_experiment requires a labeled dataset")
    timer = PhaseTimer()

    work = _stage("drop", lambda: drop_columns(ds, [], drop_string_columns=True))
    rows_total = work.row_count
    class_counts = {
        "benign": int((work.labels == 0).sum()),
        "attack": int((work.labels == 1).sum()),
    }

    if cfg.smote_before_split:
        resampled = _stage("smote", lambda: smote_resample(work, cfg.smote))
        train_raw, test_raw = _stage(
            "split", lambda: stratified_split(resampled, cfg.split_fraction, cfg.seed)
        )
        rows_train_pre_smote = None  # resampling happened before the split
        train_res = train_raw
        select_source_raw = train_raw
    else:
        train_raw, test_raw = _stage(
            "split", lambda: stratified_split(work, cfg.split_fraction, cfg.seed)
        )
        rows_train_pre_smote = train_raw.row_count
        if cfg.smote_on_scaled:
            scaler = _stage("scale", lambda: fit_scaler(train_raw))
            train_scaled_pre = apply_scaler(scaler, train_raw)
            train_res = _stage("smote", lambda: smote_resample(train_scaled_pre, cfg.smote))
        else:
            train_res = _stage("smote", lambda: smote_resample(train_raw, cfg.smote))
        select_source_raw = train_raw

    if cfg.smote_on_scaled and not cfg.smote_before_split:
        train_scaled = train_res  # already standardized above
        test_scaled = _stage("scale", lambda: apply_scaler(scaler, test_raw))
    else:
        scaler = _stage("scale", lambda: fit_scaler(train_res))
        train_scaled = apply_scaler(scaler, train_res)
        test_scaled = apply_scaler(scaler, test_raw)

    if cfg.select_before_smote:
        select_source = apply_scaler(scaler, select_source_raw)
    else:
        select_source = train_scaled
    selection = timer.run(
        "selection", lambda: _stage("selection", lambda: _fit_selection(cfg, select_source))
    )

    build = build_mlp if cfg.classifier == "mlp" else build_lstm
    model = build(selection.kept, seed=cfg.seed + 3)
    model.scaler = scaler
    model.selection = selection
    train_input = select_features(train_scaled, selection.kept)
    _, history = timer.run(
        "training", lambda: _stage("training", lambda: train(model, train_input, cfg.training))
    )
    train_seconds = timer.seconds["training"]

    preds = timer.run(
        "evaluation",
        lambda: _stage("evaluation", lambda: predict(model, test_scaled, prescaled=True)),
    )
    cm = confusion(preds, test_raw.labels)
    result = metrics(
        cm,
        train_seconds=train_seconds,
        mean_epoch_seconds=train_seconds / cfg.training.epochs,
    )

    if model_path is not None:
        save_model(model, model_path)

    return ExperimentReport(
        config=cfg.to_dict(),
        provenance={
            "source": source,
            "rows_total": rows_total,
            "class_counts": class_counts,
            "rows_train_pre_smote": rows_train_pre_smote,
            "rows_train_post_smote": train_res.row_count,
            "rows_test": test_raw.row_count,
        },
        selection=selection,
        metrics=result,
        history=history,
        phase_seconds=dict(timer.seconds),
        metrics_split="test",
        model_path=None if model_path is None else str(model_path),
    )


@dataclass
class ComparisonRow:
    name: str
    accuracy: float
    train_seconds: float
    features: int
    classifier: str
    selector: str


@dataclass
class ComparisonTable:
    rows: list[ComparisonRow]

    def to_dict(self) -> dict:
        return {
            "rows": [asdict(r) for r in self.rows],
            "reference": REFERENCE_RESULTS,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_markdown(self) -> str:
        header = ["Model", "Accuracy", "Train time (s)", "Features", "Classifier", "Selector"]
        body = [
            [
                r.name,
                f"{r.accuracy:.4f}",
                f"{r.train_seconds:.2f}",
                str(r.features),
                r.classifier,
                r.selector,
            ]
            for r in self.rows
        ]
        widths = [max(len(header[j]), *(len(row[j]) for row in body)) if body else len(header[j])
                  for j in range(len(header))]
        def fmt(cells):
            return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"
        lines = [fmt(header), "| " + " | ".join("-" * w for w in widths) + " |"]
        lines += [fmt(row) for row in body]
        lines.append("")
        lines.append(
            "Reference results at full scale: "
            + "; ".join(
                f"{name} accuracy {ref['accuracy']:.4f}, {ref['train_seconds']} s, "
                f"{ref['features']} features"
                for name, ref in REFERENCE_RESULTS.items()
            )
        )
        return "\n".join(lines) + "\n"


def compare(reports) -> ComparisonTable:
    """One row per report, ordered by experiment name.

    Accepts ExperimentReport objects or previously serialized report dicts.
    """
    if not reports:
        raise DataError("compare needs at least one report")
    rows = []
    for rep in reports:
        doc = rep.to_dict() if isinstance(rep, ExperimentReport) else rep
        selector = doc["config"]["selector"]
        spec = SelectorSpec(
            selector["method"], threshold=selector.get("threshold"), k=selector.get("k")
        )
        rows.append(
            ComparisonRow(
                name=doc["config"]["name"],
                accuracy=doc["metrics"]["accuracy"],
                train_seconds=doc["metrics"]["train_seconds"],
                features=doc["feature_count"],
                classifier=doc["config"]["classifier"],
                selector=spec.describe(),
            )
        )
    rows.sort(key=lambda r: r.name)
    return ComparisonTable(rows=rows)
