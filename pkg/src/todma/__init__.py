"""Link-level simulator for token-domain multiple access.

Devices tokenize their sources against a shared codebook, modulate each
token onto an orthonormal codeword, and transmit non-orthogonally over a
Rayleigh MIMO channel.  The receiver detects active tokens by projection,
assigns them to devices by CSI matching, resolves collisions through
residual token sets, and fills the remaining masks with a context-aware
predictor.
"""

from .assigner import MASK, AssignmentState, fine_grained_update, initial_assignment
from .channel import ScenarioConfig, sample_rayleigh, snr_to_noise_variance, transmit_slot
from .detector import DetectionResult, default_threshold, detect, project, row_energies
from .harness import (ConfigError, ResultRow, SourceSpec, SweepConfig, run_sweep, run_trial,
                      rows_to_csv, rows_to_json, simulate_frame, trial_stream, write_rows)
from .metrics import (LatencyModel, TrialOutcome, mask_rate_oracle, orth_latency, todma_latency,
                      token_error_rate, token_error_rate_one_hot)
from .modem import ModulationCodebook, build_dft_codebook, modulate, modulate_tokens
from .predictor import (BridgeClient, BridgeContractError, BridgeError, BridgeProtocolError,
                        BridgeTimeout, PredictionRequest, bridge_predict, genie_predict,
                        markov_predict, random_predict)
from .sources import (SourceModel, TokenFile, cyclic_model, dirichlet_model, from_one_hot,
                      load_sequences, one_hot, sample_sequence, sample_sequences,
                      save_model, save_sequences, uniform_model)

__version__ = "0.1.0"
