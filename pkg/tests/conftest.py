import numpy as np
import pytest

from pjmimo.model import (
    ComplexSystemModel,
    Constellation,
    RealSystemModel,
    complex_to_real,
    generate_channel,
    modulate,
)

ACCEPTANCE_LOG: list[tuple[str, bool, str]] = []


def random_real_model(rng, rows, blocks, noise=0.1) -> RealSystemModel:
    """Unstructured real instance with ``rows`` x ``blocks`` channel."""
    H = rng.standard_normal((rows, blocks)) / np.sqrt(2)
    y = rng.standard_normal(rows)
    return RealSystemModel(H, y, noise)


def qpsk_instance(rng, nr, nt, noise_std=0.0):
    c = Constellation(4)
    H = generate_channel(nr, nt, rng)
    bits = rng.integers(0, 2, 2 * nt)
    x = modulate(bits, c)
    v = noise_std * (rng.standard_normal(nr) + 1j * rng.standard_normal(nr)) / np.sqrt(2)
    m = complex_to_real(ComplexSystemModel(H, H @ x + v, noise_std**2, x))
    return m, bits, x


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LOG:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
