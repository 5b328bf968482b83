"""Guard: the figure scripts must never recompute physics.

Every plotted number has to originate from an input file, so the package
source must not call transcendental/spectral routines (no exp, log, trig,
eigensolvers, matrix products) and must not import the simulator.
"""

import ast
from pathlib import Path

import qbath_figures

BANNED_CALLS = {
    "exp", "expm1", "log", "log1p", "log2", "log10", "sin", "cos", "tan",
    "sinh", "cosh", "tanh", "sqrt", "power", "eig", "eigh", "eigvals",
    "eigvalsh", "svd", "kron", "outer", "matmul", "dot", "tensordot", "einsum",
    "boltzmann", "softmax",
}
BANNED_IMPORTS = {"qbath", "scipy"}


def package_sources():
    root = Path(qbath_figures.__file__).parent
    return sorted(root.glob("*.py"))


def test_no_physics_calls():
    offenders = []
    for path in package_sources():
        tree = ast.parse(path.read_text(), filename=str(path))
        for node in ast.walk(tree):
            if isinstance(node, ast.Call):
                func = node.func
                name = None
                if isinstance(func, ast.Name):
                    name = func.id
                elif isinstance(func, ast.Attribute):
                    name = func.attr
                if name in BANNED_CALLS:
                    offenders.append(f"{path.name}:{node.lineno} calls {name}")
    assert offenders == []


def test_no_simulator_imports():
    offenders = []
    for path in package_sources():
        tree = ast.parse(path.read_text(), filename=str(path))
        for node in ast.walk(tree):
            names = []
            if isinstance(node, ast.Import):
                names = [alias.name for alias in node.names]
            elif isinstance(node, ast.ImportFrom) and node.module:
                names = [node.module]
            for name in names:
                if name.split(".")[0] in BANNED_IMPORTS:
                    offenders.append(f"{path.name}:{node.lineno} imports {name}")
    assert offenders == []
