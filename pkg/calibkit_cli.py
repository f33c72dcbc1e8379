import sys

# Import our command line entry point
from calibkit.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
