"""Dataset-level training, prediction and tuning over the preset registry.

A trained model remembers the schema fingerprint of its training data and
refuses to score datasets with a different shape. Randomness is derived from
(spec.seed, family tag, preset index) so every preset has an independent,
reproducible stream.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .data import ColumnKind, ColumnSchema, TabularDataset, schema_fingerprint, split_train_test
from .learners.boosting import BoostModel, fit_gbt, gbt_proba
from .learners.features import (
    Featurizer,
    LearnerError,
    column_cardinalities,
    column_kinds,
    dataset_matrix,
    featurize,
    fit_featurizer,
)
from .learners.forest import ForestModel, fit_forest, forest_proba
from .learners.knn import KnnModel, fit_knn, knn_proba
from .learners.mlp import MlpModel, fit_mlp, mlp_proba
from .learners.presets import (
    FOREST,
    GBT,
    KNN,
    MLP,
    PRESET_INDEX,
    ModelSpec,
    candidate_hyperparameters,
    family_grid,
    preset_by_id,
    registry_presets,
)
from .metrics import accuracy, confusion

__all__ = [
    "ModelSpec",
    "TrainedModel",
    "registry_presets",
    "preset_by_id",
    "family_grid",
    "model_applicable",
    "train",
    "predict_proba",
    "tune_preset",
]

_FAMILY_TAG = {FOREST: 101, GBT: 202, MLP: 303}
_TUNE_TAG = 404
_INNER_RATIO = 0.8


@dataclass
class TrainedModel:
    spec: ModelSpec
    fingerprint: str
    schema: Sequence[ColumnSchema]
    payload: object
    featurizer: Optional[Featurizer] = None

    @property
    def preset_id(self) -> str:
        return self.spec.preset_id


def model_applicable(spec: ModelSpec, feature_schema: Sequence[ColumnSchema]) -> bool:
    """knn needs at least one continuous column; everything else always fits."""
    if spec.family != KNN:
        return True
    return any(c.kind == ColumnKind.CONTINUOUS for c in feature_schema)


def _seed_key(spec: ModelSpec, tag: int) -> tuple:
    return (spec.seed, tag, PRESET_INDEX.get(spec.preset_id, 97))


def train(spec: ModelSpec, ds: TabularDataset) -> TrainedModel:
    if not model_applicable(spec, ds.feature_schema):
        raise LearnerError(
            f"{spec.preset_id} is not applicable: no continuous feature columns"
        )
    if ds.has_missing():
        raise LearnerError("training data still contains missing values; impute first")
    y = ds.target()
    if len(np.unique(y)) < 2:
        raise LearnerError("training data contains a single class")

    fingerprint = schema_fingerprint(ds.schema)
    hp = dict(spec.hyperparameters)
    if spec.family == FOREST:
        X = dataset_matrix(ds)
        payload = fit_forest(X, y, hp, _seed_key(spec, _FAMILY_TAG[FOREST]))
        return TrainedModel(spec, fingerprint, ds.schema, payload)
    if spec.family == GBT:
        X = dataset_matrix(ds)
        kinds = column_kinds(ds)
        categorical = np.array([k != ColumnKind.CONTINUOUS for k in kinds])
        cards = column_cardinalities(ds)
        payload = fit_gbt(
            X,
            y,
            hp,
            _seed_key(spec, _FAMILY_TAG[GBT]),
            categorical=categorical,
            cardinalities=cards,
        )
        return TrainedModel(spec, fingerprint, ds.schema, payload)
    if spec.family == KNN:
        fz = fit_featurizer(ds)
        payload = fit_knn(featurize(ds, fz), y, hp)
        return TrainedModel(spec, fingerprint, ds.schema, payload, featurizer=fz)
    if spec.family == MLP:
        fz = fit_featurizer(ds)
        payload = fit_mlp(featurize(ds, fz), y, hp, _seed_key(spec, _FAMILY_TAG[MLP]))
        return TrainedModel(spec, fingerprint, ds.schema, payload, featurizer=fz)
    raise LearnerError(f"unknown model family {spec.family!r}")


def predict_proba(model: TrainedModel, ds: TabularDataset) -> np.ndarray:
    if schema_fingerprint(ds.schema) != model.fingerprint:
        raise LearnerError(
            f"schema fingerprint mismatch: {model.preset_id} was trained on different columns"
        )
    if ds.has_missing():
        raise LearnerError("scoring data still contains missing values; impute first")
    if model.featurizer is not None:
        X = featurize(ds, model.featurizer)
    else:
        X = dataset_matrix(ds)
    payload = model.payload
    if isinstance(payload, ForestModel):
        return forest_proba(payload, X)
    if isinstance(payload, BoostModel):
        return gbt_proba(payload, X)
    if isinstance(payload, KnnModel):
        return knn_proba(payload, X)
    if isinstance(payload, MlpModel):
        return mlp_proba(payload, X)
    raise LearnerError(f"cannot predict with payload of type {type(payload).__name__}")


def tune_preset(spec: ModelSpec, ds: TabularDataset, budget: int) -> ModelSpec:
    """Pick hyperparameters by accuracy on an inner 80:20 split of `ds`.

    The default setting is always candidate zero; up to `budget` seeded grid
    draws compete with it and ties keep the earliest candidate.
    """
    if budget <= 0:
        return spec
    rng = np.random.default_rng(np.random.SeedSequence(_seed_key(spec, _TUNE_TAG)))
    candidates = candidate_hyperparameters(spec, budget, rng)
    if len(candidates) < 2:
        return spec
    split = split_train_test(ds, _INNER_RATIO, spec.seed, stratified=True)
    inner_train = ds.take(split.train_rows)
    inner_val = ds.take(split.test_rows)
    y_val = inner_val.target()
    best_hp: Optional[Dict[str, object]] = None
    best_acc = -1.0
    for hp in candidates:
        try:
            model = train(spec.with_hyperparameters(hp), inner_train)
            probas = predict_proba(model, inner_val)
        except LearnerError:
            continue
        acc = accuracy(confusion(y_val, probas))
        if acc > best_acc:
            best_acc = acc
            best_hp = hp
    if best_hp is None:
        return spec
    return spec.with_hyperparameters(best_hp)
