"""lorentree: equivariant embeddings of regular trees into real hyperbolic
space, with the supporting quadratic-form, Lorentz-operator, tree-automorphism
and horospherical-convolution machinery."""

__version__ = "0.1.0"
