"""Experiment config files: `key = value` lines with `#` comments, read with the dotenv parser.

Example:
    family = heavy_tail
    alpha = 5.5
    epsilon = 0.05      # overridden per case by the convergence study
"""
import io
import logging
from pathlib import Path
from typing import Union

from dotenv.parser import parse_stream
from pydantic import ValidationError

from src.schemas.config import LabConfig, SolverDefaults
from src.schemas.grid import GridSpec
from src.schemas.params import RawModelParams
from src.services.exceptions import InvalidSpec, ParseError, UnknownKey

logger = logging.getLogger(__name__)

SECTIONS = {
    'params': ('family', 'conservation', 'd', 'alpha', 'beta', 'c0_initial', 'tail_radius'),
    'grid': ('n_per_axis', 'mapping', 'R_or_L'),
    'solver': ('epsilon', 'dt_factor', 't_final', 'n_modes', 'domain_length', 'scheme'),
    'run': ('seed',),
}
FIELD_NAMES = {'R_or_L': 'r_or_l'}
MODELS = {'params': RawModelParams, 'grid': GridSpec, 'solver': SolverDefaults}


def _section(key: str) -> str:
    for name, keys in SECTIONS.items():
        if key in keys:
            return name
    raise UnknownKey(key)


def parse_config(text: str) -> LabConfig:
    """:raises ParseError(line), UnknownKey(name)"""
    values = {name: {} for name in SECTIONS}
    lines = {}
    for binding in parse_stream(io.StringIO(text)):
        line = binding.original.line
        if binding.error:
            raise ParseError(line, f'cannot parse {binding.original.string.strip()!r}')
        if binding.key is None:
            continue
        if binding.value is None or binding.value == '':
            raise ParseError(line, f'{binding.key} has no value')
        section = _section(binding.key)
        values[section][FIELD_NAMES.get(binding.key, binding.key)] = binding.value
        lines[FIELD_NAMES.get(binding.key, binding.key)] = line

    if 'family' not in values['params']:
        raise InvalidSpec(detail='config must set family')
    sections = {}
    for name, model in MODELS.items():
        try:
            sections[name] = model(**values[name])
        except ValidationError as exc:
            field = str(exc.errors()[0]['loc'][0])
            raise ParseError(lines.get(field, 0), f'{field}: {exc.errors()[0]["msg"]}') from exc
    raw_seed = values['run'].get('seed')
    try:
        seed = int(raw_seed) if raw_seed is not None else None
    except ValueError as exc:
        raise ParseError(lines['seed'], 'seed must be an integer') from exc
    return LabConfig(params=sections['params'], grid=sections['grid'], solver=sections['solver'], seed=seed)


def load_config(path: Union[str, Path]) -> LabConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise InvalidSpec(detail=f'cannot read config {path}: {exc}') from exc
    config = parse_config(text)
    logger.info('Loaded config %s: %s', path, config.echo())
    return config
