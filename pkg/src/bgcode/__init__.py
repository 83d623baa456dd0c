"""Byzantine-resilient gradient coding with interactive dispute resolution.

The main node recovers the exact full gradient from a fractional
repetition code even when up to ``s`` workers lie, settling disagreements
through bisection matches and, when unavoidable, local computation.
"""
from .adversary import ATTACK_KINDS, AttackInstance, AttackSpec, build_behaviors
from .alphabet import Alphabet
from .assignment import AssignmentMatrix, SystemConfig, build_fractional_repetition
from .errors import BoundViolation, ConfigurationError, ProtocolError
from .protocol import RunResult, run_protocol, run_scheme
from .workers import TrueGradients

__version__ = "0.1.0"

__all__ = [
    "ATTACK_KINDS", "AttackInstance", "AttackSpec", "build_behaviors", "Alphabet", "AssignmentMatrix",
    "SystemConfig", "build_fractional_repetition", "BoundViolation", "ConfigurationError", "ProtocolError",
    "RunResult", "run_protocol", "run_scheme", "TrueGradients",
]
