"""Entry point for running berwald_scalar as a module."""

from .cli import main

if __name__ == "__main__":
    main()
