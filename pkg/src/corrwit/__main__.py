import sys

from corrwit.cli import main

sys.exit(main())
