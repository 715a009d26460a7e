import pytest

from fo2dec import corpus
from fo2dec.algebra import leaf_completion
from fo2dec.saturation import check_profile_saturation
from fo2dec.syntactic import syntactic_quotient


@pytest.fixture(scope="session")
def alg_a():
    return corpus.alg_a()


@pytest.fixture(scope="session")
def alg_a_c():
    return leaf_completion(corpus.alg_a())


@pytest.fixture(scope="session")
def alg_be():
    return corpus.build("alg_be")


@pytest.fixture(scope="session")
def be_saturation():
    """Saturation-only search on ALG_BE (about 10 s); shared by several tests."""
    m = corpus.build("alg_be")
    mc = leaf_completion(syntactic_quotient(m))
    return check_profile_saturation(mc, threads=1)
