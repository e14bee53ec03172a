import pytest

from shapeinv.ansatz import ShapeAnsatz
from shapeinv.model_problem import ModelProblem

P = ModelProblem()
E0 = P.E0


@pytest.fixture(scope="session")
def problem():
    return P


@pytest.fixture(scope="session")
def exact_ansatz():
    """Parameters that reproduce the model solution exactly."""
    import math
    C = -14.0 / (math.pi * E0**2.5)
    return ShapeAnsatz(C, (E0 / 7,), E0, 5.0)
