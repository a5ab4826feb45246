#!/usr/bin/env python3
import sys

from burstyrelay.cli import main

sys.exit(main())
