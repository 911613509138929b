import sys

from xling_sentiment.cli import main

sys.exit(main())
