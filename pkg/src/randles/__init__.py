"""Identifiability analysis and parameter estimation for generalised Randles circuits."""

from .circuit import (REFERENCE_CIRCUIT, CircuitParams, ModalParams, RationalTF, StateSpaceModel,
                      eval_modal, eval_tf, from_modal, to_modal, to_state_space, to_tf)
from .errors import (DesignWarning, DuplicatePolesWarning, DuplicateRoots, InvalidBand,
                     NoAcceptedTrials, NotInImage, NyquistViolation, PoleOnAxis, RandlesError,
                     RankDeficient, Rejected, SingularSystem, TooShortRecord, ZeroSignal)
from .estimate import (FitConfig, OutlierPolicy, TfFit, TrialResult, fit_tf, recover_params,
                       recover_params_topology, run_trial)
from .excitation import (ExcitationReport, MultiSineSpec, Tone, build_multisine, check_pe_order,
                         crest_factor, reference_excitation, sample, schroeder_phases)
from .identifiability import (CoefficientVector, Identifiability, IdentifiabilityVerdict,
                              classify, coefficient_map, enumerate_solutions)
from .montecarlo import StudyConfig, StudyStats, histogram_export, run_study, summarize
from .simulate import (NoiseSpec, TimeSeries, add_noise, detrend, simulate_multisine,
                       simulate_response)

__version__ = "0.1.0"
