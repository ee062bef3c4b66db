"""Allow `python -m mirelay` as an alias for the `mirelay` script."""
from .cli import main

raise SystemExit(main())
