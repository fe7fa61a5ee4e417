"""Modulo sampling and recovery for shift-invariant signal spaces."""
from .analog_chain import (FoldedSamples, MixerSpec, add_noise, fold, lowpass, mix, noise_std,
                           normalize_peak, sample)
from .ecg import (ECGRecording, ECGReport, PulseTrainSpec, detect_beats, ecg_roundtrip,
                  extract_pulse, load_recording, synthetic_pulse)
from .harness import SweepConfig, TrialResult, energy_loss, run_sweep, run_trial
from .signal_model import (BSpline, FineSignal, Generator, Grid, Lorentzian, Sinc, SISpec, Tabulated,
                           default_grid, generator_spectrum, generator_value, sinc, synthesize)
from .spectral import (CorrectionFilter, SingularFilterError, SpectrumGrid, build_correction,
                       error_propagation, extract_coefficients, mixer_to_R)
from .unfolding import (HODUnfolder, ItohUnfolder, LatticeRoundingError, PredictiveUnfolder,
                        UnfoldReport, make_unfolder, unfold_hod, unfold_itoh, unfold_predictive)

__version__ = "0.1.0"
