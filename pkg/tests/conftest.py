import os
import sys
from pathlib import Path

# tiny matmuls: BLAS threading overhead outweighs any parallel gain
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")

sys.path.insert(0, str(Path(__file__).parent))
