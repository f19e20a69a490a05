"""
Evaluators Module
Permutation-minimized Hamming error and theory diagnostics for privatized
community detection.
"""

from .hamming import (
    align_labels,
    best_permutation,
    confusion_matrix,
    hamming_error,
)

from .diagnostics import (
    AssumptionConstants,
    DiagnosticsReport,
    RegimeReport,
    corollary_regime_check,
    diagnostics,
)

__all__ = [
    'align_labels',
    'best_permutation',
    'confusion_matrix',
    'hamming_error',
    'AssumptionConstants',
    'DiagnosticsReport',
    'RegimeReport',
    'corollary_regime_check',
    'diagnostics',
]
