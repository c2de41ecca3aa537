"""
Configuration Management
Loads solver and CLI settings from environment variables
"""

import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Solver defaults
MAX_ITERS = int(os.getenv('HOLEVO_MAX_ITERS', 10000))
GRAD_TOL = float(os.getenv('HOLEVO_GRAD_TOL', 1e-6))
RESTARTS = int(os.getenv('HOLEVO_RESTARTS', 5))
SEED = int(os.getenv('HOLEVO_SEED', 0))
DELTA = float(os.getenv('HOLEVO_DELTA', 1e-9))
SIMPLEX_GEOMETRY = os.getenv('HOLEVO_SIMPLEX_GEOMETRY', 'euclidean')
STALL_TOL = float(os.getenv('HOLEVO_STALL_TOL', 1e-12))
STALL_WINDOW = int(os.getenv('HOLEVO_STALL_WINDOW', 100))

# Armijo line search
ARMIJO_INITIAL_STEP = float(os.getenv('HOLEVO_ARMIJO_INITIAL_STEP', 1.0))
ARMIJO_CONTRACTION = float(os.getenv('HOLEVO_ARMIJO_CONTRACTION', 0.5))
ARMIJO_SUFFICIENT_DECREASE = float(os.getenv('HOLEVO_ARMIJO_SUFFICIENT_DECREASE', 1e-4))
ARMIJO_MAX_BACKTRACKS = int(os.getenv('HOLEVO_ARMIJO_MAX_BACKTRACKS', 50))

# Parallel restarts (joblib n_jobs)
N_JOBS = int(os.getenv('HOLEVO_N_JOBS', 1))

# Dimension caps
MAX_KRAUS_DIM = int(os.getenv('HOLEVO_MAX_KRAUS_DIM', 64))
MAX_CQ_LETTERS = int(os.getenv('HOLEVO_MAX_CQ_LETTERS', 4096))
MAX_PRODUCT_DIM = int(os.getenv('HOLEVO_MAX_PRODUCT_DIM', 64))

# Logging
LOG_LEVEL = os.getenv('HOLEVO_LOG_LEVEL', 'WARNING')
