"""Module entry point: python -m clustercrit ..."""

import sys

from .cli import main

sys.exit(main())
