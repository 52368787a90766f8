import sys

from franson.cli import main

sys.exit(main())
