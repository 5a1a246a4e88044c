"""The thirteen first-level model presets and their tuning grids."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .features import LearnerError

KNN, FOREST, GBT, MLP = "knn", "forest", "gbt", "mlp"


@dataclass(frozen=True)
class ModelSpec:
    preset_id: str
    family: str
    hyperparameters: Dict[str, object] = field(default_factory=dict)
    seed: int = 0

    def with_seed(self, seed: int) -> "ModelSpec":
        return replace(self, seed=int(seed))

    def with_hyperparameters(self, hp: Dict[str, object]) -> "ModelSpec":
        return replace(self, hyperparameters=dict(hp))


_GBT_COMMON = {"n_trees": 200, "max_depth": 6, "learning_rate": 0.1, "min_child": 5}
_FOREST_COMMON = {"n_trees": 300, "max_depth": 0, "min_leaf": 1}

_PRESETS: Tuple[ModelSpec, ...] = (
    ModelSpec("knn-uniform", KNN, {"k": 5, "weighted": False}),
    ModelSpec("knn-distance", KNN, {"k": 5, "weighted": True}),
    ModelSpec("gbt-xt", GBT, {**_GBT_COMMON, "order": "first", "random_cuts": True}),
    ModelSpec("gbt-default", GBT, {**_GBT_COMMON, "order": "first"}),
    ModelSpec("gbt-large", GBT, {**_GBT_COMMON, "order": "first", "n_trees": 500, "max_depth": 10}),
    ModelSpec("gbt-newton", GBT, {**_GBT_COMMON, "order": "newton", "l2": 1.0}),
    ModelSpec(
        "gbt-ordered",
        GBT,
        {**_GBT_COMMON, "order": "newton", "l2": 1.0, "oblivious": True, "ordered_stats": True},
    ),
    ModelSpec("rf-gini", FOREST, {**_FOREST_COMMON, "criterion": "gini", "bootstrap": True}),
    ModelSpec("rf-entropy", FOREST, {**_FOREST_COMMON, "criterion": "entropy", "bootstrap": True}),
    ModelSpec(
        "xt-gini",
        FOREST,
        {**_FOREST_COMMON, "criterion": "gini", "bootstrap": False, "random_cuts": True},
    ),
    ModelSpec(
        "xt-entropy",
        FOREST,
        {**_FOREST_COMMON, "criterion": "entropy", "bootstrap": False, "random_cuts": True},
    ),
    ModelSpec("mlp-a", MLP, {"hidden": (64,), "learning_rate": 1e-3, "epochs": 150, "batch_size": 32}),
    ModelSpec("mlp-b", MLP, {"hidden": (128, 64), "learning_rate": 1e-3, "epochs": 150, "batch_size": 32}),
)

PRESET_INDEX: Dict[str, int] = {p.preset_id: i for i, p in enumerate(_PRESETS)}

# per-family search space for the random-draw tuner; every key overrides a default
FAMILY_GRIDS: Dict[str, Dict[str, Sequence]] = {
    KNN: {"k": (3, 5, 7, 9, 11, 15)},
    FOREST: {"min_leaf": (1, 2, 4), "max_depth": (0, 8, 12)},
    GBT: {
        "learning_rate": (0.05, 0.1, 0.2),
        "max_depth": (4, 6, 8, 10),
        "min_child": (5, 10, 20),
    },
    MLP: {
        "learning_rate": (3e-4, 1e-3, 3e-3),
        "epochs": (100, 150, 200),
        "batch_size": (16, 32, 64),
    },
}


def registry_presets() -> List[ModelSpec]:
    return list(_PRESETS)


def preset_by_id(preset_id: str) -> ModelSpec:
    if preset_id not in PRESET_INDEX:
        known = ", ".join(sorted(PRESET_INDEX))
        raise LearnerError(f"unknown preset {preset_id!r} (known: {known})")
    return _PRESETS[PRESET_INDEX[preset_id]]


def family_grid(family: str) -> Dict[str, Sequence]:
    if family not in FAMILY_GRIDS:
        raise LearnerError(f"unknown model family {family!r}")
    return dict(FAMILY_GRIDS[family])


def candidate_hyperparameters(spec: ModelSpec, budget: int, rng: np.random.Generator) -> List[Dict[str, object]]:
    """Defaults first, then up to `budget` distinct seeded grid draws."""
    grid = family_grid(spec.family)
    keys = sorted(grid)
    candidates: List[Dict[str, object]] = [dict(spec.hyperparameters)]
    seen = {tuple(sorted(candidates[0].items()))}
    attempts = 0
    while len(candidates) < budget + 1 and attempts < 20 * (budget + 1):
        attempts += 1
        hp = dict(spec.hyperparameters)
        for key in keys:
            options = grid[key]
            hp[key] = options[int(rng.integers(len(options)))]
        fp = tuple(sorted(hp.items()))
        if fp not in seen:
            seen.add(fp)
            candidates.append(hp)
    return candidates
