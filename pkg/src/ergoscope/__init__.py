"""Ergodicity-hierarchy classification for countable-state Markov chains.

The package decides, numerically and with certificate witnesses, where a
chain sits on the hierarchy recurrent -> ergodic -> higher polynomial
moments -> exponentially ergodic -> strongly ergodic, by combining monotone
truncation sweeps of minimal nonnegative solutions, explicit single-birth
criteria, inverse-criterion witness sequences, and a Monte Carlo oracle.
"""

from .chain import (GeneratorSpec, RawModel, RowCache, TruncatedSystem,
                    build_truncated_system, embedded_kernel, enumerate_states,
                    index_raw_model, normalize_target_set)
from .classify import (ErgodicityReport, TierResult, classify,
                       transience_certificate_check)
from .errors import (BudgetExhausted, CapacityError, ErgoscopeError,
                     ModelError, NumericsError)
from .minsolve import (AffineOperator, CertificateReport, MinimalSolution,
                       check_certificate, from_truncation, solve_direct,
                       solve_iterative)
from .moments import (ExpMomentCurve, MomentSweep, MomentTable,
                      default_schedule, exp_moment_scan, moment_ladder,
                      truncation_sweep)
from .simulate import (MomentEstimate, ReturnTimeSample, SimulationResult,
                       draw_return_times, estimate_moments, sample_return_time)
from .single_birth import (SingleBirthSpec, SingleBirthTableau, build_tableau,
                           catastrophe_recurrence, ergodicity_explicit,
                           recurrence_explicit, strong_explicit,
                           truncated_closed_form, unbounded_solution_fixture)
from .verdict import DEFAULT_RULE, Verdict, VerdictRule, boundedness_verdict
from .witness import (WitnessReport, WitnessSequence, WitnessTerm,
                      gen_nonergodic_witness, gen_nonexp_witness,
                      gen_nonstrong_witness, verify_witness)
from . import zoo

__version__ = "0.1.0"
