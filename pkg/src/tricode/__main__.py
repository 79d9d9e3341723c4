import sys

from tricode.cli import main

sys.exit(main())
