"""Allow running as: python3 -m stringtable spectrum --config run.json"""
import sys

from stringtable.cli import main

sys.exit(main())
