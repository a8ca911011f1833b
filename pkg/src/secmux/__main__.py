import sys

from secmux.cli import main

sys.exit(main())
