import pytest

from advtox.datasets import infer_task, load_dataset
from advtox.resources import ResourceBundle, default_data_dir
from advtox.victims import TrainConfig, train_surrogate

DATA = default_data_dir()


@pytest.fixture(scope="session")
def resources():
    return ResourceBundle.load()


@pytest.fixture(scope="session")
def mc_task():
    return infer_task(DATA / "corpus_multiclass.csv", "csv", "multiclass")


@pytest.fixture(scope="session")
def mc_corpus(mc_task):
    return load_dataset(DATA / "corpus_multiclass.csv", "csv", mc_task)


@pytest.fixture(scope="session")
def toxic_seeds(mc_task):
    return load_dataset(DATA / "seeds_toxic_50.csv", "csv", mc_task)


@pytest.fixture(scope="session")
def ml_task():
    return infer_task(DATA / "corpus_multilabel.csv", "csv", "multilabel")


@pytest.fixture(scope="session")
def ml_corpus(ml_task):
    return load_dataset(DATA / "corpus_multilabel.csv", "csv", ml_task)


@pytest.fixture(scope="session")
def base_model(mc_corpus, mc_task):
    texts = [r.text for r in mc_corpus.records]
    labels = [r.label for r in mc_corpus.records]
    model, report = train_surrogate(texts, labels, mc_task, TrainConfig(seed=42))
    assert report.accuracy >= 0.85
    return model


@pytest.fixture(scope="session")
def ml_model(ml_corpus, ml_task):
    texts = [r.text for r in ml_corpus.records]
    labels = [r.label for r in ml_corpus.records]
    model, _ = train_surrogate(texts, labels, ml_task, TrainConfig(seed=42))
    return model
