"""Cost-aware workload allocation of a microservice application over a
hybrid fog/public cloud."""

__version__ = "0.1.0"
