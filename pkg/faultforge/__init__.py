"""
faultforge: software fault prediction on PROMISE CK metrics

Feature selection (RFE, L1, MI, CFS) x classifiers (RF, LR, SVM)
x hyperparameter tuning (grid, random, GA), evaluated by stratified k-fold CV
with per-fold ADASYN.
"""

__version__ = "0.1.0"
__author__ = "anonymous"
