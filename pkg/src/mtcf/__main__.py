import sys
from mtcf.cli import main

sys.exit(main())
