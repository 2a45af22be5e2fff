"""
Configuration settings for the matchmarket simulator
"""

import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class Config:
    """Base configuration class"""
    # Batch execution
    THREADS = int(os.environ.get('MATCHMARKET_THREADS') or os.cpu_count() or 1)

    # Logging
    LOG_LEVEL = (os.environ.get('MATCHMARKET_LOG_LEVEL') or 'INFO').upper()

    # Brute-force stable-set enumeration
    ENUM_BUDGET = int(os.environ.get('MATCHMARKET_ENUM_BUDGET', 10_000_000))

    # Artifacts
    OUTPUT_DIR = os.environ.get('MATCHMARKET_OUTPUT_DIR') or 'out'

    # Regret checkpoints
    CHECKPOINT_COUNT = 8

    @classmethod
    def thread_cap(cls, override=None):
        """Resolve the worker count for a batch, never below one"""
        threads = override if override is not None else cls.THREADS
        return max(1, int(threads))


class DevelopmentConfig(Config):
    """Development configuration"""
    DEBUG = True


class ProductionConfig(Config):
    """Production configuration"""
    DEBUG = False


class TestingConfig(Config):
    """Testing configuration"""
    DEBUG = True
    THREADS = 1
    ENUM_BUDGET = 1_000_000
    OUTPUT_DIR = 'out_test'


config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}


def get_config(name=None):
    """Return the configuration class selected by name or MATCHMARKET_ENV"""
    name = name or os.environ.get('MATCHMARKET_ENV') or 'default'
    return config.get(name, DevelopmentConfig)
