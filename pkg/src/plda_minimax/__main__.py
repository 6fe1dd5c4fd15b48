"""Module entry point for ``python -m plda_minimax``."""

from plda_minimax.main import main

if __name__ == "__main__":
    raise SystemExit(main())
