"""Entry point for python -m pagrad_cli command."""

from .main import cli

if __name__ == "__main__":
    cli()
