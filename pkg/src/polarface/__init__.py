"""Face verification in the polar frequency domain.

Pipeline: register/normalise a face crop, transform it (Fourier-Bessel or
polar Fourier, globally or over three eye regions), embed it in the
dissimilarity space of the gallery and score identity claims with
per-subject pseudo-Fisher discriminants.
"""

__version__ = "0.1.0"
