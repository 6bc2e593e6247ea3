import random
import sys
from fractions import Fraction

import numpy as np
import pytest

from mmscheme import catalog
from mmscheme.formats import parse_slp
from mmscheme.model import BilinearScheme, standard_scheme

SMALL_DIMS = [(1, 1, 1), (1, 2, 1), (2, 1, 2), (1, 2, 2), (2, 2, 1), (2, 2, 2), (2, 3, 2), (1, 3, 2)]


def _unimodular(k: int, rng: random.Random) -> tuple[np.ndarray, np.ndarray]:
    """Random integer matrix with integer inverse, built from row operations."""
    X = np.eye(k, dtype=object)
    Xinv = np.eye(k, dtype=object)
    for _ in range(rng.randint(0, 3)):
        if k == 1:
            break
        i, j = rng.sample(range(k), 2)
        s = rng.choice((-1, 1))
        E = np.eye(k, dtype=object)
        E[i, j] = s
        Einv = np.eye(k, dtype=object)
        Einv[i, j] = -s
        X = E @ X
        Xinv = Xinv @ Einv
    return X, Xinv


def transform(scheme: BilinearScheme, rng: random.Random) -> BilinearScheme:
    """Apply A -> X A Y^-1, B -> Y B Z^-1 plus product rescaling and shuffling.

    For row-major vectorisation vec(P A Q) = kron(P, Q^T) vec(A); a scheme for
    the transformed inputs therefore has U' = kron(X^-1, Y^T)^T U and so on.
    """
    n, m, p = scheme.dims
    X, Xi = _unimodular(n, rng)
    Y, Yi = _unimodular(m, rng)
    Z, Zi = _unimodular(p, rng)
    U = np.array(scheme.U, dtype=object)
    V = np.array(scheme.V, dtype=object)
    W = np.array(scheme.W, dtype=object)
    U = np.kron(Xi, Y.T).T @ U
    V = np.kron(Yi, Z.T).T @ V
    W = np.kron(X, Zi.T) @ W
    R = scheme.rank
    for r in range(R):
        a = Fraction(rng.choice((1, -1, 2, -1))) if rng.random() < 0.3 else Fraction(rng.choice((1, -1)))
        b = Fraction(rng.choice((1, -1)))
        U[:, r] *= a
        V[:, r] *= b
        W[:, r] /= a * b
    perm = list(range(R))
    rng.shuffle(perm)
    return BilinearScheme(scheme.dims, U[:, perm].tolist(), V[:, perm].tolist(), W[:, perm].tolist(), name="random")


def random_valid_schemes(count: int = 50, seed: int = 1234) -> list[BilinearScheme]:
    rng = random.Random(seed)
    bases = [standard_scheme(d) for d in SMALL_DIMS] + [catalog.builtin("strassen")]
    return [transform(rng.choice(bases), rng) for _ in range(count)]


def dense(scheme: BilinearScheme):
    return tuple(np.array(M, dtype=object) for M in (scheme.U, scheme.V, scheme.W))


def brute_tensor(dims) -> np.ndarray:
    """Matrix multiplication tensor built by literally multiplying index matrices."""
    n, m, p = dims
    T = np.zeros((n * m, m * p, n * p), dtype=object)
    for i in range(n):
        for t in range(p):
            for j in range(m):
                # C[i][t] += A[i][j] * B[j][t]
                T[i * m + j, j * p + t, i * p + t] += 1
    return T


def brent_oracle(dims, U, V, W) -> bool:
    """Independent dense check: einsum of the factor matrices against the tensor."""
    mats = [np.array(M, dtype=object) for M in (U, V, W)]
    if all(x.denominator == 1 for M in mats for x in map(Fraction, M.flat)):
        mats = [M.astype(np.int64) for M in mats]
    got = np.einsum("ar,br,cr->abc", *mats)
    return bool(np.all(got == brute_tensor(dims)))


@pytest.fixture(scope="session")
def random_schemes():
    return random_valid_schemes()


@pytest.fixture(scope="session")
def file_scheme():
    return catalog.builtin("stapleton59-file")


@pytest.fixture(scope="session")
def naive_scheme():
    return catalog.builtin("stapleton59-naive")


@pytest.fixture(scope="session")
def slp59():
    return catalog.builtin("stapleton59-slp")


@pytest.fixture(scope="session")
def strassen():
    return catalog.builtin("strassen")


def single_entry_mutations(scheme: BilinearScheme, count: int = 100, seed: int = 7):
    """Seeded copies of (U, V, W) with exactly one entry changed within {-1, 0, 1}."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        mats = [[list(row) for row in M] for M in (scheme.U, scheme.V, scheme.W)]
        which = rng.randrange(3)
        row = rng.randrange(len(mats[which]))
        col = rng.randrange(scheme.rank)
        old = mats[which][row][col]
        mats[which][row][col] = Fraction(rng.choice([v for v in (-1, 0, 1) if v != old]))
        out.append(((which, row, col), *mats))
    return out


@pytest.fixture(scope="session")
def strassen_slp():
    return parse_slp(catalog.STRASSEN)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        terminalreporter.write_line(module.line(number))
