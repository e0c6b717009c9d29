import sys

from snrdps.cli import main

sys.exit(main())
