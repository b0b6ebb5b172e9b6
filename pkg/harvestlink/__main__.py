import sys

from harvestlink.Cli.Commands import main

sys.exit(main())
