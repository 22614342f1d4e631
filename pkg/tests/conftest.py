from __future__ import annotations

import json
from pathlib import Path

import pytest

from graphjac.graphs import Graph, LengthFunction, graph_from_dict, lengths_from_dict

DATA = Path(__file__).parent / "data"


def load(name: str) -> tuple[Graph, LengthFunction]:
    doc = json.loads((DATA / name).read_text())
    g = graph_from_dict(doc)
    return g, lengths_from_dict(doc, g)


@pytest.fixture
def theta() -> tuple[Graph, LengthFunction]:
    return load("theta.json")


@pytest.fixture
def rose2() -> tuple[Graph, LengthFunction]:
    return load("rose2.json")


@pytest.fixture
def dumbbell() -> tuple[Graph, LengthFunction]:
    return load("dumbbell.json")


@pytest.fixture
def data_dir() -> Path:
    return DATA
