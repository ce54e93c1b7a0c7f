"""Allow running as `python -m eigenldp`."""
import sys

from .cli import main

sys.exit(main())
