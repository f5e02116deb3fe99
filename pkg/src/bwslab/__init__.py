"""bwslab: best-worst scaling annotation toolkit and tweet emotion-intensity
regression pipeline.

Subpackages by stage: corpus (data files, splits, submissions), tuples
(annotation design generation), service (live annotation collection with
quality control), scoring (response aggregation and reliability), tokenizer /
features (text to vectors), regress (linear SVR), evaluate (official
metrics), cli (batch entry points).
"""

__version__ = "0.1.0"
