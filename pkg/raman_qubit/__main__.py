import sys

from raman_qubit.main import main

sys.exit(main())
