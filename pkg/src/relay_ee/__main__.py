import sys

from relay_ee.cli import main

sys.exit(main())
