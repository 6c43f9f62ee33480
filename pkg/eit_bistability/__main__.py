import sys

from eit_bistability.cli import main

sys.exit(main())
