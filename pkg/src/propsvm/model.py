"""Trained-model container shared by all three trainers."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .kernels import KernelConfig, kernel_matrix

__all__ = ["PsvmModel", "model_to_json", "model_from_json"]


@dataclass(frozen=True)
class PsvmModel:
    """Kernel expansion classifier: f(x) = sum_i coefficients_i K(x_i, x) + bias.

    ``coefficients`` absorbs both the dual weights and the (possibly
    real-valued) training labels, so prediction never needs the labels
    separately.  ``labels`` records the label assignment the trainer settled
    on for its own training instances (None for the calibration baseline,
    which never forms one).
    """

    coefficients: np.ndarray
    bias: float
    support_indices: np.ndarray
    kernel: KernelConfig
    train_features: np.ndarray | None
    objective: float
    labels: np.ndarray | None
    warnings: tuple = ()
    restart_objectives: tuple | None = None
    cut_objectives: tuple | None = None
    history: tuple | None = None

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        if self.train_features is None:
            raise ValueError(
                "model was trained from a precomputed kernel matrix; "
                "no stored features to evaluate new points against"
            )
        cross = kernel_matrix(self.kernel, np.atleast_2d(x), self.train_features)
        return cross @ self.coefficients + self.bias

    def predict(self, x: np.ndarray) -> np.ndarray:
        f = self.decision_function(x)
        return np.where(f >= 0.0, 1.0, -1.0)


def model_to_json(model: PsvmModel) -> str:
    payload = {
        "coefficients": model.coefficients.tolist(),
        "bias": model.bias,
        "support_indices": model.support_indices.tolist(),
        "kernel": {"kind": model.kernel.kind, "gamma": model.kernel.gamma},
        "train_features": None
        if model.train_features is None
        else model.train_features.tolist(),
        "objective": model.objective,
        "labels": None if model.labels is None else model.labels.tolist(),
        "warnings": list(model.warnings),
    }
    return json.dumps(payload, sort_keys=True)


def model_from_json(text: str) -> PsvmModel:
    payload = json.loads(text)
    kern = payload["kernel"]
    return PsvmModel(
        coefficients=np.asarray(payload["coefficients"], dtype=np.float64),
        bias=float(payload["bias"]),
        support_indices=np.asarray(payload["support_indices"], dtype=np.int64),
        kernel=KernelConfig(kern["kind"], kern["gamma"]),
        train_features=None
        if payload["train_features"] is None
        else np.asarray(payload["train_features"], dtype=np.float64),
        objective=float(payload["objective"]),
        labels=None
        if payload["labels"] is None
        else np.asarray(payload["labels"], dtype=np.float64),
        warnings=tuple(payload.get("warnings", ())),
    )
