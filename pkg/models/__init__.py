from models.base import BaseClassifier
from models.knn import KnnModel, train_knn
from models.logistic import LogisticModel, train_logistic
from schemas import ModelConfig, ModelKind
from services.tabular import Dataset


def train_model(train: Dataset, config: ModelConfig) -> BaseClassifier:
    """Fit the configured model kind on one training split."""
    if config.kind == ModelKind.KNN:
        return train_knn(train, config)
    return train_logistic(train, config)


__all__ = ["BaseClassifier", "KnnModel", "LogisticModel", "train_model", "train_knn", "train_logistic"]
