"""Allow `python -m pycgn`."""

from .cli import main

main()
