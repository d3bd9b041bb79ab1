import json
from importlib import resources

import pytest

from signstream.neuralnet import TrainConfig, build_pointnet_lite, train
from signstream.retrieval import HashedNGramProvider
from signstream.synthetic import classification_dataset, demo_store


@pytest.fixture(scope="session")
def model():
    """Small point-cloud classifier trained once for the whole run."""
    dataset = classification_dataset(n_per_class=50, sigma=0.02, seed=0)
    cfg = TrainConfig(epochs=25, batch_size=64, seed=1, validation_fraction=0.1)
    trained, history = train(dataset, cfg, build_pointnet_lite(), lr=0.002)
    assert history[-1].val_accuracy > 0.9
    return trained


@pytest.fixture(scope="session")
def store():
    return demo_store(["HELLO", "WORLD", "STORE"], HashedNGramProvider(64))


@pytest.fixture(scope="session")
def wire_schema():
    text = resources.files("signstream.data").joinpath("wire_schema.json").read_text()
    return json.loads(text)
