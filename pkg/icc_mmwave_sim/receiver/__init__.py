from .detection import (
    MIN_EXTRINSIC_VARIANCE,
    damp,
    data_combine,
    data_covariance,
    data_sic,
    deflated_combine,
    hard_decide,
    qpsk_denoise,
)
from .estimation import chan_combine, chan_denoise, chan_noise_terms, chan_sic
from .jcde import JccctReceiver, run_jcde
from .prediction import anchor_select, predict_window
from .schedule import build_schedule

__all__ = [
    "MIN_EXTRINSIC_VARIANCE",
    "JccctReceiver",
    "anchor_select",
    "build_schedule",
    "chan_combine",
    "chan_denoise",
    "chan_noise_terms",
    "chan_sic",
    "damp",
    "data_combine",
    "data_covariance",
    "data_sic",
    "deflated_combine",
    "hard_decide",
    "predict_window",
    "qpsk_denoise",
    "run_jcde",
]
