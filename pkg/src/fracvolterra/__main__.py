import sys

from fracvolterra.harness.cli import main

sys.exit(main())
