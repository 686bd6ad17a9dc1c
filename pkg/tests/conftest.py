import numpy as np
import pytest

from cutdg.mesh import MeshComplex, build_background_mesh, generate_interfaces, interfaces_at, no_interfaces
from cutdg.operator import assemble

CRITERIA = {}


def record_criterion(key: str, passed: bool, detail: str):
    CRITERIA[key] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA, key=lambda k: (int(k.split(".")[0]), k)):
        ok, detail = CRITERIA[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def cut_complex(n=20, alpha=0.1, seed=0, domain=(0.0, 2.0), region=(0.75, 1.25), delta=0.2):
    mesh = build_background_mesh(*domain, n)
    if region is None:
        ifaces = no_interfaces(mesh)
    else:
        ifaces = generate_interfaces(mesh, region, alpha, seed)
    return MeshComplex(mesh, ifaces, delta)


def single_cut(n=10, pos=1.0037 * 0.2, domain=(0.0, 2.0), delta=0.2):
    mesh = build_background_mesh(*domain, n)
    return MeshComplex(mesh, interfaces_at(mesh, [pos]), delta)


@pytest.fixture
def cx():
    return cut_complex()


@pytest.fixture
def op2(cx):
    return assemble(cx, 2)
