import os
from pathlib import Path

# Load .env file if it exists
def load_env():
    env_file = Path(__file__).parent / '.env'
    if env_file.exists():
        with open(env_file) as f:
            for line in f:
                line = line.strip()
                if line and not line.startswith('#') and '=' in line:
                    key, value = line.split('=', 1)
                    os.environ.setdefault(key, value)

load_env()

class Config:
    # Base directory
    BASE_DIR = os.path.abspath(os.path.dirname(__file__))

    # Scenario presets shipped with the repo
    PRESET_DIR = os.path.join(BASE_DIR, 'presets')

    # Output
    DEFAULT_OUTPUT_DIR = os.environ.get('RDNA_OUTPUT_DIR', os.path.join(BASE_DIR, 'results'))
    CSV_SIGNIFICANT_DIGITS = 9

    # Monte Carlo defaults
    DEFAULT_SEED = int(os.environ.get('RDNA_DEFAULT_SEED', 1))
    DEFAULT_REPS = 1000
    DEFAULT_PARALLELISM = int(os.environ.get('RDNA_WORKERS', 1))
    DEFAULT_MESSAGES = 1000
    DEFAULT_MONITOR_WINDOW = 200.0

    # Redundancy planner search bound
    SURFACE_W_MAX = 64

    # Logging
    LOG_LEVEL = os.environ.get('RDNA_LOG_LEVEL', 'INFO')

    # Planning service
    BIND_HOST = os.environ.get('BIND_HOST', '127.0.0.1')
    BIND_PORT = int(os.environ.get('BIND_PORT', 5000))

    @staticmethod
    def seed_override():
        """Seed from RDNA_SEED, read at call time so it wins over --seed."""
        value = os.environ.get('RDNA_SEED')
        if value is None or value.strip() == '':
            return None
        return int(value, 0)
