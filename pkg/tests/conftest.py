import json

import numpy as np
import pytest

from ahmca.corpus import SynthSpec, generate_synthetic
from ahmca.taxonomy import load_taxonomy

TWO_LEVEL = {
    "labels": [
        {"id": "A", "text": "alpha topic", "level": 1, "parent": None},
        {"id": "B", "text": "beta topic", "level": 1, "parent": None},
        {"id": "A1", "text": "alpha one", "level": 2, "parent": "A"},
        {"id": "A2", "text": "alpha two", "level": 2, "parent": "A"},
        {"id": "B1", "text": "beta one", "level": 2, "parent": "B"},
    ]
}


@pytest.fixture
def two_level_tax():
    return load_taxonomy(json.dumps(TWO_LEVEL))


@pytest.fixture(scope="session")
def tiny_synth():
    """k=4 world: 2 levels x 2 labels, 5-token documents."""
    spec = SynthSpec(level_sizes=(2, 2), docs_per_leaf=4, doc_length=5,
                     keywords_per_doc=1, leaf_vocab_size=5, noise_rate=0.0,
                     seed=3, embedding_dim=4)
    return generate_synthetic(spec)


@pytest.fixture(scope="session")
def small_synth():
    spec = SynthSpec(level_sizes=(2, 4), docs_per_leaf=10, doc_length=20,
                     keywords_per_doc=2, leaf_vocab_size=15, noise_rate=0.1,
                     seed=11, embedding_dim=8)
    return generate_synthetic(spec)
