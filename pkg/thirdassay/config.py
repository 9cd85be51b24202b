from pathlib import Path

CONFIG_DIR = Path(__file__).resolve().parent / 'configs'
DEFAULT_CONFIG = CONFIG_DIR / 'default.yaml'

SEED_ENV_VAR = 'THIRDASSAY_SEED'
DEFAULT_SEED = 42

MODELS = ['normal', 'laplace']

# Truncation of the real line; neglected tail mass is below 1e-9 for both laws
TRUNCATION = {'normal': 10.0, 'laplace': 16.0}

# Protocol / figure defaults
DEFAULT_ALPHA = 0.05
DEFAULT_SIGMA = 0.4
GRID_MIN, GRID_MAX, GRID_STEP = -4.0, 4.0, 0.01

TABLE1_ALPHAS = [0.10, 0.05, 0.025, 0.01, 0.005]
SWEEP_ALPHAS = [0.005, 0.01, 0.025, 0.05, 0.075, 0.10]

# Numerics
DEFAULT_TOL = 1e-8
G_TOL = 1e-10
ROOT_TOL = 1e-12
ROOT_BRACKET = (0.0, 50.0)
MAX_EVALUATIONS = 1_000_000
WEIGHT_CLAMP = 1e-12

# Monte Carlo chunking: fixed sizes so results never depend on worker count
SIM_CHUNK = 2 ** 16
# Pairs drawn at once by the rejection sampler; small alpha takes several blocks
MAX_PAIR_BLOCK = SIM_CHUNK * 32
REPS_CHUNK = 2_000
N_WORKERS = 4

SIG_DIGITS = 10
HIST_BIN_WIDTH = 0.1
