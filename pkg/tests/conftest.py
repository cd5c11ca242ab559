import numpy as np
import pytest

from fa_rsma.harness.config import ExperimentConfig
from fa_rsma.harness.experiment import build_scenario


def make_scenario(seed, users=4, antennas=4, region=3.0, power=30.0, share=0.11, sdma=False, rc=None, rel_err=0.01, paths=12):
    cfg = ExperimentConfig(n_users=users, n_antennas=antennas, n_paths=paths, rc=rc, rel_csi_error=rel_err)
    return build_scenario(cfg, seed, power, share, region, sdma)


def random_covariances(rng, users, antennas, scale=0.2):
    w = (rng.standard_normal((users + 1, antennas)) + 1j * rng.standard_normal((users + 1, antennas))) * scale
    return np.einsum("in,im->inm", w, w.conj())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


CRITERIA: dict = {}


def report_criterion(number: int, passed: bool, detail: str) -> None:
    CRITERIA[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[n])
