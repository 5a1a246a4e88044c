"""Base learner families: featurization, trees, forests, boosting, knn, mlp."""

from .features import LearnerError
from .presets import ModelSpec, family_grid, preset_by_id, registry_presets

__all__ = [
    "LearnerError",
    "ModelSpec",
    "family_grid",
    "preset_by_id",
    "registry_presets",
]
