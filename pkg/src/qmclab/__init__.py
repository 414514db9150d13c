"""qmclab: a desk-scale laboratory for multiclass quantum classification.

Dense state-vector simulation of data re-uploading circuits, Pauli-string
and computational-basis-projector observable sets, loss-concentration
scans, and neural-collapse indicator studies on synthetic datasets.
"""

__version__ = "0.1.0"

BUILD_ID = f"qmclab-{__version__}"
