import sys

from mpxDT.cli import main

sys.exit(main())
