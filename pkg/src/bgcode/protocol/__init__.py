from .scheme import DracoResult, Metrics, RunResult, decode, draco_baseline, run_protocol, run_scheme
from .tournament import (MatchOutcome, MatchState, Tournament, final_voting_round, first_disagreeing_coord,
                         form_groups, resolve_match, run_match, run_tournament)
from .transcript import Record, Transcript, read_jsonl

__all__ = [
    "DracoResult", "Metrics", "RunResult", "decode", "draco_baseline", "run_protocol", "run_scheme",
    "MatchOutcome", "MatchState", "Tournament", "final_voting_round", "first_disagreeing_coord", "form_groups",
    "resolve_match", "run_match", "run_tournament", "Record", "Transcript", "read_jsonl",
]
