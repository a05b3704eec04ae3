import sys

from spectral_gng.main import main

sys.exit(main())
