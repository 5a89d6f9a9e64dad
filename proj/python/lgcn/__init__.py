"""Latent-relation graph convolution for multigraph node classification."""

import json

from ._lgcn import (
    CheckpointError,
    Multigraph,
    ParseError,
    StructuralError,
    TrainingError,
    aggregate_profile,
    auc,
    generate_financial,
    generate_transport_toy,
    load_dataset,
    macro_f1,
    normalize,
    parameter_count,
    save_dataset,
)
from ._lgcn import train as _train

__all__ = [
    "CheckpointError",
    "Model",
    "Multigraph",
    "ParseError",
    "StructuralError",
    "TrainingError",
    "aggregate_profile",
    "auc",
    "generate_financial",
    "generate_transport_toy",
    "load_dataset",
    "macro_f1",
    "normalize",
    "parameter_count",
    "save_dataset",
    "train",
]


class Model:
    """A trained model and the report of its training run."""

    def __init__(self, fitted):
        self._fitted = fitted
        self.report = json.loads(fitted.report_json)

    @property
    def num_parameters(self):
        return self._fitted.num_parameters

    def predict(self, graph):
        """Logits, one row per vertex."""
        return self._fitted.predict(graph)

    def edge_embeddings(self, graph):
        """First-layer edge encoder outputs, one row per edge."""
        return self._fitted.edge_embeddings(graph)

    def evaluate_inductive(self, fresh, seed=0):
        """Report for a graph the model was not trained on."""
        return json.loads(self._fitted.inductive_json(fresh, seed))

    def save(self, path):
        self._fitted.save(str(path))


def train(label, graph, epochs=2000, learning_rate=None, weight_decay=None, seed=0, split_seed=0):
    """Train the model named by `label` ("GCN", "DVE", "L4-GCN+", ...) on a normalized graph."""
    fitted = _train(
        label,
        graph,
        epochs=epochs,
        learning_rate=-1.0 if learning_rate is None else learning_rate,
        weight_decay=-1.0 if weight_decay is None else weight_decay,
        seed=seed,
        split_seed=split_seed,
    )
    return Model(fitted)
