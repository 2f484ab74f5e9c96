"""Shaped multilevel polar coding toolkit.

Honda-Yamamoto coset encoding over set-partitioned PAM/ASK alphabets,
successive-cancellation list decoding with dynamic-frozen-bit and
re-encoding validity checks, Monte-Carlo code construction, and a
reproducible frame-error-rate simulation harness.
"""

from .codec import (
    CodeSpec,
    Codeword,
    DecodeResult,
    decode_dynfrozen,
    decode_reencode,
    decode_standard,
    encode,
    is_valid_codeword,
    load_spec,
    save_spec,
)
from .construction import (
    PRESETS,
    EntropyProfile,
    build_code_spec,
    build_preset,
    estimate_posterior_entropies,
    estimate_prior_entropies,
    measure_effective_distribution,
    select_sets,
)
from .crc import CrcConfig, crc_check, crc_compute
from .kernel import (
    IndexPolicy,
    checknode,
    metric_update,
    polar_transform,
    scl_run,
    varnode,
)
from .modulation import (
    ChannelParams,
    Constellation,
    InputDistribution,
    awgn,
    build_constellation,
    map_symbols,
    maxwell_boltzmann,
    mutual_information,
    optimize_nu,
    posterior_level_llr,
    prior_level_llr,
)
from .sim import FerPoint, SweepConfig, TrialRecord, run_sweep, run_trial
from .streams import seed_stream

__version__ = "0.1.0"
