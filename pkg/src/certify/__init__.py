"""Certificate gains, the upper bound they provide, and saddle-point checks."""

from .certificate import (
    CertificateReport,
    DecoupledData,
    FailureReason,
    candidate_certificates,
    certificate_are,
    check_certificate,
    decoupled_data,
    search_certificate,
    upper_bound_check,
)
from .saddle import SaddleReport, saddle_check

__all__ = [
    'CertificateReport',
    'DecoupledData',
    'FailureReason',
    'SaddleReport',
    'candidate_certificates',
    'certificate_are',
    'check_certificate',
    'decoupled_data',
    'saddle_check',
    'search_certificate',
    'upper_bound_check',
]
