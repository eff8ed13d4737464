import sys

from cotunnel.cli import main

sys.exit(main())
