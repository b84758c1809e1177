import os
import sys
import tempfile
import traceback

# Add project root to path
ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if ROOT not in sys.path:
    sys.path.append(ROOT)

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")


def acceptance_enabled():
    """Long, experiment-scale checks run only with SRLAB_ACCEPTANCE=1."""
    return os.environ.get("SRLAB_ACCEPTANCE") == "1"


def freeze_enabled():
    """SRLAB_FREEZE_GOLDEN=1 rewrites golden fixtures instead of comparing against them."""
    return os.environ.get("SRLAB_FREEZE_GOLDEN") == "1"


def write_yaml(text, directory=None):
    directory = directory or tempfile.mkdtemp(prefix="srlab_")
    path = os.path.join(directory, "config.yaml")
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    return path


def run_all(namespace):
    """Run every test_* function in `namespace`, print a summary and exit non-zero on failure."""
    tests = [fn for name, fn in namespace.items() if name.startswith("test_") and callable(fn)]
    failed = []
    for test in tests:
        try:
            test()
            print(f"✅ {test.__name__}")
        except Exception:
            failed.append(test.__name__)
            print(f"❌ {test.__name__}")
            traceback.print_exc()
    print(f"\n{len(tests) - len(failed)}/{len(tests)} passed")
    sys.exit(1 if failed else 0)
