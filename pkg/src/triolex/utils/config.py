# Copyright 2025 Lucas Zampieri
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import logging
from pathlib import Path

logger = logging.getLogger(__name__)

DEFAULTS = {
    "dmax": 3,
    "determinant_rank_cap": 4,
    "valence_cap": 3,
    "identity_degree_bound": 1,
    "indent": 2,
}


def get_config_dir():
    """Get the config directory path and create it if it doesn't exist"""
    config_dir = Path.home() / '.config' / 'triolex'
    config_dir.mkdir(parents=True, exist_ok=True)
    return config_dir


def load_config():
    """Load config from .config/triolex/config.json or fallback to current directory"""
    config_dir = get_config_dir()
    config_path = config_dir / 'config.json'

    for path in (config_path, Path('config.json')):
        try:
            with open(path, 'r') as f:
                config = json.load(f)
        except FileNotFoundError:
            continue
        except json.JSONDecodeError as e:
            logger.warning(f"Ignoring unreadable config {path}: {e}")
            return dict(DEFAULTS)
        if not isinstance(config, dict):
            logger.warning(f"Ignoring config {path}: expected a JSON object")
            return dict(DEFAULTS)
        return config

    logger.info(f"No config.json found, using defaults (create one at {config_path})")
    return dict(DEFAULTS)


def _non_negative_int(config, key):
    value = config.get(key, DEFAULTS[key])
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        logger.warning(f"Invalid {key} in config: {value!r}")
        return DEFAULTS[key]
    return value


def get_dmax(config):
    return _non_negative_int(config, 'dmax')


def get_determinant_cap(config):
    return _non_negative_int(config, 'determinant_rank_cap')


def get_valence_cap(config):
    return _non_negative_int(config, 'valence_cap')


def get_identity_degree_bound(config):
    return _non_negative_int(config, 'identity_degree_bound')


def get_indent(config):
    return _non_negative_int(config, 'indent')
