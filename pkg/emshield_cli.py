#!/usr/bin/env python3
"""
Batch entry point for em-shield
"""

import sys
from pathlib import Path

# Add the package directory to Python path
package_dir = Path(__file__).parent / "emshield"
sys.path.insert(0, str(package_dir))

from cli import main

if __name__ == '__main__':
    sys.exit(main())
