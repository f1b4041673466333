"""Features as modules."""

from .controller import FeaturesController


FEATURES = FeaturesController()
