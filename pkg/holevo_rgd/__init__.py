# Holevo capacity lower bounds by Riemannian gradient descent

__version__ = "1.0.0"
