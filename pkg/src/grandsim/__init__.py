"""GRAND decoding of random linear codes over Gray-coded square M-QAM.

Library layout:

* ``gf2code``    GF(2) arithmetic, random linear codes, syndrome tests
* ``modem``      constellation geometry, mapping, hard detection, neighborhoods
* ``channel``    flat block-fading AWGN channel and equalization
* ``likelihood`` error-structure probabilities and the ordered lookup table
* ``grand``      pattern enumeration and the two decoders
* ``harness``    Monte Carlo driver, statistics, validation, emission
* ``plots``      report figures
* ``cli``        command-line entry point (``grandsim``)
"""

from .channel import ChannelState, equalize, sample_fading, transmit
from .gf2code import LinearCode, encode, generate_rlc, is_codeword, syndrome
from .grand import (BitLevelDecoder, DecodeOutcome, SymbolLevelDecoder,
                    bit_level_patterns, bit_pattern_count, decode,
                    symbol_level_patterns)
from .harness import (SimConfig, SimResult, emit_results, emit_validation,
                      run_block, run_simulation, validate_structures)
from .likelihood import (StructureTable, build_structure_table, d_prime,
                         q_func, structure_prob, structure_prob_factorized,
                         table_memory_bits, type_probs)
from .modem import (Constellation, build_constellation, classify_and_neighbors,
                    hard_detect, modulate)

__all__ = [
    "BitLevelDecoder", "ChannelState", "Constellation", "DecodeOutcome",
    "LinearCode", "SimConfig", "SimResult", "StructureTable",
    "SymbolLevelDecoder", "bit_level_patterns", "bit_pattern_count",
    "build_constellation", "build_structure_table", "classify_and_neighbors",
    "d_prime", "decode", "emit_results", "emit_validation", "encode",
    "equalize", "generate_rlc", "hard_detect", "is_codeword", "modulate",
    "q_func", "run_block", "run_simulation", "sample_fading", "structure_prob",
    "structure_prob_factorized", "symbol_level_patterns", "syndrome",
    "table_memory_bits", "transmit", "type_probs", "validate_structures",
]

__version__ = "0.1.0"
