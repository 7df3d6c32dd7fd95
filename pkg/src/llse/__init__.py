"""Low-latency single-channel speech enhancement.

Streaming pipeline: asymmetric-window STFT -> 66-feature band compression ->
TF mask (Wiener baseline, GRU, or causal U-Net) -> mask expansion ->
overlap-add synthesis, at 20 ms algorithmic latency.  Plus mixture
simulation, SDR/STOI metrics, and complexity accounting.
"""

from .audio import AudioBuffer, read_wav, write_wav
from .bands import BandLayout, compress, expand_mask, make_layout
from .filterbank import (ConfigError, OlaState, WindowPair, analyze,
                         design_windows, latency_samples, synthesize)
from .metrics import MetricReport, evaluate_set, sdr, stoi
from .nnet import (GruModel, UnetModel, apply_mask, count_macs_per_second,
                   count_params, load_model)
from .pipeline import StreamingEnhancer, enhance_buffer, make_engine
from .simulate import (MixSpec, convolve_ir, highpass, make_test_set,
                       mix_at_snr, resample_2x)
from .weights import (WeightFormatError, WeightSchemaError, load_tensors,
                      save_tensors)
from .wiener import (SuppressorConfig, SuppressorState, a_posteriori_snr,
                     decision_directed_xi, wiener_gain)

__version__ = "0.1.0"
