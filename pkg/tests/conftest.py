import os

import pytest

from engine.grounder import Grounder
from engine.justify import JustificationManager
from engine.kernel import Definition, PartialStructure
from engine.normalize import dependency_graph, recursive_components
from frontend.parser import parse

INSTANCES_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "instances")


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the large-instance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def _read(name):
    with open(os.path.join(INSTANCES_DIR, name), "r", encoding="utf-8") as f:
        return f.read()


@pytest.fixture
def ex33_text():
    return _read("ex33.thy"), _read("ex33.str"), _read("ex33.trace")


@pytest.fixture
def ex33(ex33_text):
    problem, structure = parse(ex33_text[0], ex33_text[1])
    return problem, structure


@pytest.fixture
def ex33_theory(ex33):
    return ex33[0].canonical()


@pytest.fixture
def ex33_paths():
    return os.path.join(INSTANCES_DIR, "ex33.thy"), os.path.join(INSTANCES_DIR, "ex33.str"), \
        os.path.join(INSTANCES_DIR, "ex33.trace")


@pytest.fixture
def make_manager():
    """
    Grounder and justification manager over the user rules of a problem.

    The goal rule is left out of D_d and the small-formula shortcut is off,
    so every rule is handled lazily.
    """

    def build(problem_text, structure_text=None, threshold=0, **options):
        problem, initial = parse(problem_text, structure_text)
        theory = problem.canonical()
        vocabulary = theory.vocabulary.copy()
        d_delayed = theory.definition.copy()
        d_delayed.remove("1")
        structure = PartialStructure(len(vocabulary.elements))
        grounder = Grounder(vocabulary, Definition(), d_delayed, initial, exists_batch=1, disjunct_batch=1,
                            small_formula_threshold=threshold)
        components = recursive_components(dependency_graph(theory.definition))
        manager = JustificationManager(vocabulary, grounder, structure, components, **options)
        return theory, grounder, manager

    return build
