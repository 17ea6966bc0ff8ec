#!/usr/bin/env python3
"""
Startup script for FiberLink
Loads the environment and hands the command line to cli.main
"""

import sys
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

from cli import main

if __name__ == '__main__':
    print("🚀 Starting FiberLink...", file=sys.stderr)
    try:
        code = main()
    except KeyboardInterrupt:
        print("\n🛑 Interrupted", file=sys.stderr)
        code = 130
    sys.exit(code)
