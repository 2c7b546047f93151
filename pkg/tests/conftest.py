import random

import pytest

from fogdetect import blsig, paillier


@pytest.fixture(scope="session")
def tiny_keys():
    # p=5, q=7: n=35, lambda=12, mu=3
    return paillier.keypair_from_primes(5, 7)


@pytest.fixture(scope="session")
def keys16():
    return paillier.keygen(16, random.Random(16), allow_unsafe=True)


@pytest.fixture(scope="session")
def keys1024():
    return paillier.keygen(1024, random.Random(1024))


@pytest.fixture(scope="session")
def toy():
    return blsig.get_group("toy")


@pytest.fixture(scope="session")
def bls():
    return blsig.get_group("bls12-381")


@pytest.fixture(params=["toy", "bls12-381"], scope="session")
def group(request):
    return blsig.get_group(request.param)


_criteria: list[str] = []


class _Criterion:
    def __init__(self, cid: str, title: str):
        self.cid = cid
        self.title = title

    def record(self, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] {self.cid} {self.title}: {detail}"
        print(line)
        _criteria.append(line)
        return ok


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if _criteria:
        terminalreporter.section("acceptance criteria")
        for line in _criteria:
            terminalreporter.write_line(line)
