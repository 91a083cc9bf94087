"""Main entry point for the qwalks command line."""
from qwalks.src.cli import cli


def main():
    cli(prog_name="qwalks")


if __name__ == "__main__":
    main()
