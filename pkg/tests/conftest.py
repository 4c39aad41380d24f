import numpy as np
import pytest

from lindblad_mpa.mpa import AuxRep


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_rep(rng, n=2, M=3) -> AuxRep:
    return AuxRep(
        random_complex(rng, (n, n, M, M)),
        random_complex(rng, (n, n, M, M)),
        random_complex(rng, M),
        random_complex(rng, M),
    )


def random_hermitian(rng, d):
    A = random_complex(rng, (d, d))
    return (A + A.conj().T) / 2


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
