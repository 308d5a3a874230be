"""fusepipe: deep-feature fusion and classifier-voting pipeline.

Library surface: preprocessing (imgprep), the feature-file format and
splitting (featureio), scaling/PCA/SMOTE (transforms), nine from-scratch
classifiers behind one fit/predict contract (classifiers), grid-search CV
(hpo), the two ensembling levels (ensemble), reporting (evalreport), and the
stage orchestration (pipeline, cli).
"""

__version__ = "0.1.0"
