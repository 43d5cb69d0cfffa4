import sys

from netred.cli import main


if __name__ == "__main__":
    sys.exit(main())
