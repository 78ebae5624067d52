import sys

from kfbd.main import main

sys.exit(main())
