"""
Model Trainer node.

Fits the configured classifier on the fold's training split, or adopts a
preloaded model when one is supplied, and records train/test accuracy.
"""

import time
from typing import Any, Dict, Optional

from errors import ModelError
from models import train_model
from models.base import BaseClassifier, accuracy
from utils.logging import get_logger

log = get_logger(__name__)


def run(*, state: Dict[str, Any], preloaded: Optional[BaseClassifier] = None) -> Dict[str, Any]:
    train = state["train"]
    test = state["test"]
    config = state["config"]
    t0 = time.perf_counter()

    if preloaded is not None:
        if preloaded.schema.names != train.schema.names:
            raise ModelError(f"fold {state['fold']}: preloaded model features do not match the dataset")
        model = preloaded
    else:
        model = train_model(train, config.model)

    state["model"] = model
    state["train_accuracy"] = accuracy(model, train)
    state["test_accuracy"] = accuracy(model, test)
    state.setdefault("timings", {})["training"] = time.perf_counter() - t0
    log.info(
        "fold model ready",
        extra={"ctx": {"fold": state["fold"], "model": model.descriptor,
                       "train_accuracy": round(state["train_accuracy"], 4),
                       "test_accuracy": round(state["test_accuracy"], 4)}},
    )
    return state
