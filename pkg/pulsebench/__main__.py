import sys

from pulsebench.cli import main

sys.exit(main())
