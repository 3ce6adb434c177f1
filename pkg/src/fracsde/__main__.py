import sys

from fracsde.cli import main

sys.exit(main())
