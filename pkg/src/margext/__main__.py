import sys

from margext.cli import main

sys.exit(main())
