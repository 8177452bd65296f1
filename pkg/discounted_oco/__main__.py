"""Allow ``python -m discounted_oco``."""
import sys

from .harness.cli import main

sys.exit(main())
