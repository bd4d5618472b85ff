"""Screening toolkit for bronchial disease risk assessment.

Combines weighted symptom questionnaires, pulmonary test records and
chest image texture features into a single reflective input vector,
then classifies it with an associative memory and several reference
learners.
"""

__version__ = "0.1.0"
