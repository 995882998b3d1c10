import sys

from berezin.cli import main

sys.exit(main())
