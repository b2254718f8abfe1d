import sys
from pathlib import Path

# test-local helpers (proggen) live next to the tests
sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"
