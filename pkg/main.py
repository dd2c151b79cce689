#!/usr/bin/env python3
"""
🎯 EMA-TRACE WORKBENCH - MAIN ENTRY POINT
========================================

Experiments on fixed exponential-moving-average traces:
• SPCN hierarchy + linear role probes
• micro SPEN language model, predictor ablation
• inference-time fast weights and streaming perplexity

Usage:
    python3 main.py grammar --out-dir data/corpus
    python3 main.py table1 --set corpus_dir=data/corpus
    python3 main.py spen-train --set steps=500
    python3 main.py ablate
    python3 main.py stream
    python3 main.py bench

Results are saved under $EMA_WORKBENCH_RESULTS_DIR (default results/runs).
"""

import sys
from pathlib import Path

# Add project root to Python path
sys.path.append(str(Path(__file__).parent))

from dotenv import load_dotenv

from presentation.cli.workbench_cli import main

if __name__ == "__main__":
    load_dotenv()
    sys.exit(main())
