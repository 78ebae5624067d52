from kfbd.generators.base import RadialGenerator, SandwichConstants, get_generator

__all__ = ["RadialGenerator", "SandwichConstants", "get_generator"]
