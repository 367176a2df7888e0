"""Entry point for running as module: python -m cohn_localization"""

from .cli import cli

if __name__ == "__main__":
    cli()
