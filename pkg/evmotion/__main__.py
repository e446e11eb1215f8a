"Run evmotion as a module: python -m evmotion"
import sys

from evmotion.cli import main

sys.exit(main())
