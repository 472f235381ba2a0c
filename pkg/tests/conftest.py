import pytest

import screenkit as sk
from helpers import lasso_problem


@pytest.fixture(scope="session")
def small_lasso():
    """A 30x60 instance reused by several invariant tests."""
    X, loss = lasso_problem(11, n=30, p=60, k=5)
    lam = 0.2 * sk.lambda_max(X, loss, sk.L1(1.0))
    return X, loss, sk.L1(lam)
