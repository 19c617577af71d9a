import sys

from opendyn.main import main

sys.exit(main())
