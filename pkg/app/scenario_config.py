"""
Scenario config files: a sectioned key-value format read with configparser.

    [scenario]
    n_o = 50
    n_tap = 10
    n_channels = 4

Every key is typed by SCHEMA; unknown sections and keys are rejected with the
line they appear on.
"""
import configparser
import logging
import os
import re
from dataclasses import dataclass, field

from app.errors import ConfigError

logger = logging.getLogger(__name__)

REQUIRED = object()

# section -> key -> (type, default). REQUIRED keys must appear in files.
SCHEMA = {
    'scenario': {
        'n_o': (int, REQUIRED),
        'n_tap': (int, REQUIRED),
        'n_channels': (int, REQUIRED),
        'n_users': (int, 40),
        'area_side': (float, 50.0),
        'msg_size': (float, 1.0),
        'slot_duration': (float, 0.1),
    },
    'taps': {
        'wired_fraction': (float, 0.5),
        'wired_availability': (float, 0.95),
        'wireless_availability': (float, 0.85),
        'compute_capacity': (float, 20.0),
        'storage_capacity': (float, 100.0),
        'incentive_weight': (float, 0.0),
    },
    'traffic': {
        'mu_s': (float, 6.0),
        'lambda_p': (float, 1.0),
        'mu_p': (float, 2.0),
        'p_share': (float, 0.5),
        'tau_p_per_unit': (float, 0.05),
        'tau_a_base': (float, 0.2),
        'tau_d2d': (float, 0.05),
        'pu_distance_gain': (float, 0.0),
    },
    'power': {
        'p_tx': (float, 0.75),
        'message_rate': (float, 0.002),
        'e_compute_per_unit': (float, 0.02),
        'p_storage_per_unit': (float, 0.001),
        'path_loss_exponent': (float, 3.0),
        'd0': (float, 1.0),
        'snr0': (float, 1000.0),
        'd_min': (float, 0.1),
    },
    'experiment': {
        'reps': (int, 1000),
        'seed': (int, 1),
        'parallelism': (int, 1),
        'messages': (int, 1000),
        'monitor_window': (float, 200.0),
        'w': (int, 1),
        'n_a': (int, 1),
        'smart': (bool, False),
        'd2d': (bool, False),
    },
}

# Defaults used for required keys when a config is built from a dict
DICT_DEFAULTS = {'n_o': 50, 'n_tap': 10, 'n_channels': 4}

_KEY_SECTION = {key: section for section, keys in SCHEMA.items() for key in keys}

_BOOLEAN_STATES = configparser.ConfigParser.BOOLEAN_STATES


@dataclass
class ScenarioConfig:
    """Parsed, type-checked config document"""
    sections: dict = field(default_factory=dict)
    source: str = '<dict>'

    def get(self, section, key):
        return self.sections[section][key]

    def section(self, name):
        return dict(self.sections[name])

    def with_overrides(self, **values):
        """Return a copy with flat `key=value` overrides applied"""
        merged = {name: dict(keys) for name, keys in self.sections.items()}
        for key, value in values.items():
            section = _section_of(key)
            merged[section][key] = _coerce(section, key, value)
        return ScenarioConfig(sections=merged, source=self.source)

    def preamble(self):
        """`section.key=value` lines, in schema order, for output headers"""
        from app.utils import format_float
        lines = []
        for section, keys in SCHEMA.items():
            for key in keys:
                lines.append(f"{section}.{key}={format_float(self.sections[section][key])}")
        return lines

    @classmethod
    def from_dict(cls, values, source='<dict>'):
        """
        Build a config from a nested {section: {key: value}} or flat {key: value} dict.

        Missing keys take their schema default; required keys fall back to
        DICT_DEFAULTS. Unknown keys raise ConfigError.
        """
        given = {}
        for name, value in (values or {}).items():
            if isinstance(value, dict):
                if name not in SCHEMA:
                    raise ConfigError(f"unknown section [{name}]", section=name)
                for key, item in value.items():
                    if key not in SCHEMA[name]:
                        raise ConfigError(f"unknown key '{key}' in [{name}]", key=key, section=name)
                    given[key] = item
            else:
                _section_of(name)
                given[name] = value

        sections = {}
        for section, keys in SCHEMA.items():
            sections[section] = {}
            for key, (_, default) in keys.items():
                if key in given:
                    sections[section][key] = _coerce(section, key, given[key])
                elif default is REQUIRED:
                    sections[section][key] = DICT_DEFAULTS[key]
                else:
                    sections[section][key] = default
        return cls(sections=sections, source=source)


def parse_config(path):
    """
    Read and type-check a scenario config file.

    Args:
        path: Path to a `.cfg` file

    Returns:
        ScenarioConfig: Parsed config

    Raises:
        ConfigError: Missing file, bad syntax, unknown or missing key, bad type
    """
    if not os.path.isfile(path):
        raise ConfigError(f"scenario file not found: {path}")
    with open(path, encoding='utf-8') as f:
        text = f.read()
    logger.debug("Parsing scenario config %s", path)
    return parse_config_text(text, source=str(path))


def parse_config_text(text, source='<string>'):
    """Parse config text; see parse_config"""
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"duplicate section [{e.section}]", section=e.section, lineno=e.lineno)
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"duplicate key '{e.option}' in [{e.section}]",
                          key=e.option, section=e.section, lineno=e.lineno)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("entry before any [section] header", lineno=e.lineno)
    except configparser.ParsingError as e:
        lineno, line = e.errors[0]
        raise ConfigError(f"cannot parse {line.strip()!r}", lineno=lineno)

    sections = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", section=section,
                              lineno=_line_of(text, section))
        for key in parser[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]", key=key, section=section,
                                  lineno=_line_of(text, section, key))

    for section, keys in SCHEMA.items():
        sections[section] = {}
        for key, (_, default) in keys.items():
            if parser.has_option(section, key):
                raw = parser.get(section, key)
                try:
                    sections[section][key] = _coerce(section, key, raw)
                except ConfigError as e:
                    raise ConfigError(str(e), key=key, section=section,
                                      lineno=_line_of(text, section, key))
            elif default is REQUIRED:
                raise ConfigError(f"missing required key '{key}' in [{section}]",
                                  key=key, section=section)
            else:
                sections[section][key] = default
    return ScenarioConfig(sections=sections, source=source)


def _section_of(key):
    try:
        return _KEY_SECTION[key]
    except KeyError:
        raise ConfigError(f"unknown key '{key}'", key=key) from None


def _coerce(section, key, value):
    kind = SCHEMA[section][key][0]
    try:
        if kind is bool:
            if isinstance(value, bool):
                return value
            text = str(value).strip().lower()
            if text not in _BOOLEAN_STATES:
                raise ValueError(text)
            return _BOOLEAN_STATES[text]
        if kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError(value)
            if isinstance(value, str):
                text = value.strip()
                return int(text, 0) if text.lower().startswith(('0x', '0o', '0b')) else int(text)
            return int(value)
        if isinstance(value, bool):
            raise ValueError(value)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"'{key}' expects {kind.__name__}, got {value!r}",
                          key=key, section=section) from None


def _line_of(text, section, key=None):
    """1-based line of a section header, or of a key inside that section"""
    current = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        header = re.fullmatch(r'\[\s*(.+?)\s*\]', stripped)
        if header:
            current = header.group(1)
            if key is None and current == section:
                return number
            continue
        if key is not None and current == section:
            name = re.split(r'[=:]', stripped, maxsplit=1)[0].strip()
            if name == key:
                return number
    return None
