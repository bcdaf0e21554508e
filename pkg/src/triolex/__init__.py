"""Exact calculus on triole algebras A ⊕ P ⊕ Q over QQ[x1..xn]"""

import importlib.metadata
import subprocess
from pathlib import Path


def _get_fallback_version():
    """Short git SHA of the checkout when the package is not installed"""
    project_root = Path(__file__).resolve().parents[2]
    try:
        result = subprocess.run(
            ["git", "rev-parse", "--short=8", "HEAD"],
            cwd=project_root,
            capture_output=True,
            text=True,
            check=True
        )
        return f"0+g{result.stdout.strip()}"
    except (subprocess.CalledProcessError, FileNotFoundError):
        return "unknown"


try:
    __version__ = importlib.metadata.version("triolex")
except importlib.metadata.PackageNotFoundError:
    __version__ = _get_fallback_version()

from triolex.utils.errors import TriolexError  # noqa: E402
from triolex.utils.report import Report  # noqa: E402
from triolex.utils.triolecore import TrioleAlgebra, TrioleElement  # noqa: E402
from triolex.utils.workspace import WorkspaceFile  # noqa: E402

__all__ = ["Report", "TriolexError", "TrioleAlgebra", "TrioleElement", "WorkspaceFile", "__version__"]
