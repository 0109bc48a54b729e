"""Quantum mean-value dynamics: discrete, quasi-continuous and mixed spectra."""
from .models import (
    DiscreteSpectrumModel,
    HamiltonianModel,
    MixedObservable,
    MixedSpectrumModel,
    QuantumObservable,
    QuantumState,
    QuasiContinuousModel,
    VanHoveObservable,
    gaussian_continuum,
    gaussian_kernel,
    gaussian_observable_basket,
    gaussian_profile,
    mean_value_series,
    mixed_example,
)
from .qsdt import (
    APERIODIC,
    CesaroResult,
    QSDTSplit,
    QuantumLevelReport,
    WeakLimitResult,
    cesaro_limit,
    classify_quantum,
    decade_decay,
    decay_horizon,
    homogenization_check,
    match_lines,
    period_of,
    qsdt_split,
    weak_limit,
)
from .two_level import TwoLevelReport, closed_form_series, two_level_demo

__all__ = [
    "APERIODIC",
    "CesaroResult",
    "DiscreteSpectrumModel",
    "HamiltonianModel",
    "MixedObservable",
    "MixedSpectrumModel",
    "QSDTSplit",
    "QuantumLevelReport",
    "QuantumObservable",
    "QuantumState",
    "QuasiContinuousModel",
    "TwoLevelReport",
    "VanHoveObservable",
    "WeakLimitResult",
    "cesaro_limit",
    "classify_quantum",
    "closed_form_series",
    "decade_decay",
    "decay_horizon",
    "gaussian_continuum",
    "gaussian_kernel",
    "gaussian_observable_basket",
    "gaussian_profile",
    "homogenization_check",
    "match_lines",
    "mean_value_series",
    "mixed_example",
    "period_of",
    "qsdt_split",
    "two_level_demo",
    "weak_limit",
]
