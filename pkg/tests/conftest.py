import os

import pytest

CORPUS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                      "corpus")


def corpus_path(name: str) -> str:
    return os.path.join(CORPUS, name)


@pytest.fixture(scope="session")
def corpus_dir():
    return CORPUS


def load(name: str):
    from coinpattern.lang import lower, parse_file
    return lower(parse_file(corpus_path(name)))


def load_space(name: str, instance=None, node_cap=10_000_000):
    from coinpattern.semantics import build
    return build(load(name), instance, node_cap)
