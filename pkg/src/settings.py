import os
from functools import lru_cache
from pathlib import Path

import tomli
from pydantic import BaseSettings, Field


class LabSettings(BaseSettings):
    workers: int = Field(1, env='WORKERS')


class ProjectSettings(BaseSettings):
    @property
    def project_name(self):
        return self._get_poetry().get('name')

    @property
    def project_version(self):
        return self._get_poetry().get('version')

    @property
    def version_string(self):
        return f'{self.project_name} {self.project_version}'

    def _get_poetry(self):
        with open(f'{Path(__file__).resolve().parent.parent}{os.sep}pyproject.toml', 'rb') as reader:
            pyproject = tomli.load(reader)
        return pyproject['tool']['poetry']


class LogSettings(BaseSettings):
    log_level: str = Field('ERROR', env='LOG_LEVEL')
    log_format: str = Field(
        '%(asctime)s %(levelname)s %(process)d [%(name)s] [%(filename)s:%(lineno)d] - %(message)s',
        env='LOG_FORMAT',
    )
    date_format: str = Field('%Y-%m-%d %H:%M:%S', env='DATE_FORMAT')


class SolverSettings(BaseSettings):
    dt_factor: float = Field(0.1, env='DT_FACTOR')
    t_final: float = Field(0.5, env='T_FINAL')
    bound_slack: float = Field(1e-8, env='BOUND_SLACK')
    cond_limit: float = Field(1e12, env='COND_LIMIT')
    eig_dense_limit: int = Field(4096, env='EIG_DENSE_LIMIT')
    chi_nodes: int = Field(64, env='CHI_NODES')
    singular_tol: float = Field(1e-6, env='SINGULAR_TOL')


class OutputSettings(BaseSettings):
    output_dir: str = Field('results', env='OUTPUT_DIR')
    json_indent: int = Field(2, env='JSON_INDENT')


class EnvSettings(BaseSettings):
    lab_settings = LabSettings()
    log_settings = LogSettings()
    solver_settings = SolverSettings()
    output_settings = OutputSettings()
    project_settings = ProjectSettings()


@lru_cache
def get_settings() -> EnvSettings:
    return EnvSettings()
