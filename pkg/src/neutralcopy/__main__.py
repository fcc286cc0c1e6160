import sys

from neutralcopy.cli import main

sys.exit(main())
