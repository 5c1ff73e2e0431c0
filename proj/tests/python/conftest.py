import sys
from pathlib import Path

# fall back to the in-tree CMake build when pydina is not installed
try:
    import pydina  # noqa: F401
except ImportError:
    build = Path(__file__).resolve().parents[2] / "build"
    if build.is_dir():
        sys.path.insert(0, str(build))
