# Bench package initialization
# Instance generators, brute-force oracle and the mode comparison harness

from .generators import FAMILIES, InstanceSpec, generate
from .oracle import OracleResult, oracle_solve
from .harness import RunReport, compare, sweep, write_csv

__all__ = ['FAMILIES', 'InstanceSpec', 'generate', 'OracleResult', 'oracle_solve', 'RunReport', 'compare',
           'sweep', 'write_csv']
