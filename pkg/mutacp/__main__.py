"""The entry point of the command line."""

import sys

from mutacp import framework

sys.exit(framework.main())
