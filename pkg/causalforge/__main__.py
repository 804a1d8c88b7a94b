import sys

from causalforge.cli import main

sys.exit(main())
