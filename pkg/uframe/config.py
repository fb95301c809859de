"""
config.py

Responsible for loading environment variables using python-dotenv,
and providing them, together with the numerical tolerances shared by
every module, to the rest of the package.
"""

import os
from dotenv import load_dotenv

load_dotenv()

UFRAME_THREADS: int = int(os.getenv("UFRAME_THREADS", "1"))
UFRAME_LOG_LEVEL: str = os.getenv("UFRAME_LOG_LEVEL", "WARNING")
UFRAME_DEFAULT_SEED: int = int(os.getenv("UFRAME_DEFAULT_SEED", "1234"))

# Frobenius norm of A - A^dagger tolerated before symmetrizing.
HERMITIAN_TOL: float = 1e-10
# Eigenvalues down to -PSD_TOL count as zero.
PSD_TOL: float = 1e-10
# Relative rank threshold (times the largest eigenvalue).
EIGEN_CLIP: float = 1e-12
FRAME_TOL: float = 1e-10
DUAL_TOL: float = 1e-8
POVM_TOL: float = 1e-8
STATE_TOL: float = 1e-10
PROBABILITY_CLIP: float = 1e-8
# Tr[U nu*] below this is treated as vanishing.
TRACE_FLOOR: float = 1e-12

DEFAULT_HAAR_SAMPLES: int = 100_000
DEFAULT_QUADRATURE: int = 2000
