import sys

from coopsgd.cli import main

sys.exit(main())
