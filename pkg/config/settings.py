from pathlib import Path
from dotenv import load_dotenv
import os

# Base directory of the project (heatperim/)
BASE_DIR = Path(__file__).resolve().parent.parent

# Load environment variables from .env at project root
ENV_PATH = BASE_DIR / ".env"
if ENV_PATH.exists():
    load_dotenv(ENV_PATH)

ARTIFACT_VERSION = "0.3.0"

# Worker budget for ladder and experiment fan-out (--workers falls back to this)
DEFAULT_WORKERS = int(os.getenv("HEATPERIM_WORKERS", "1"))

# Verifier tolerance (--tol falls back to this)
DEFAULT_TOL = float(os.getenv("HEATPERIM_TOL", "1e-8"))

# Heat semigroup strategy selection
SPECTRAL_THRESHOLD = int(os.getenv("HEATPERIM_SPECTRAL_THRESHOLD", "4096"))
KRYLOV_TOL = float(os.getenv("HEATPERIM_KRYLOV_TOL", "1e-10"))

# Output directories
RESULTS_DIR = Path(os.getenv("HEATPERIM_RESULTS_DIR", str(BASE_DIR / "results")))
CONFIGS_DIR = BASE_DIR / "harness" / "configs"
