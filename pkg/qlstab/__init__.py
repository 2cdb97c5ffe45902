__version__ = '0.1.0'

from .tensor import MultipartiteSpace, NeighborhoodStructure, Subspace, DensityOperator
from .generator import LindbladGenerator, Term, liouvillian, is_invariant, verify_gas, is_gas
from .analysis import dqls_test, did, did_gas, nogo_ghz
from .synthesis import Synthesizer, synthesize_qls, synthesize_conditional, construct_wtype, drift_compensate
from .dynamics import evolve, convergence_report
from .utils import logger
