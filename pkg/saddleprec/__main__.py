import sys

from saddleprec.cli import main

sys.exit(main())
