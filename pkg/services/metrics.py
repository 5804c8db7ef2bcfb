import logging
import os
from prometheus_client import CollectorRegistry, Counter, Histogram, write_to_textfile

logger = logging.getLogger("mh.metrics")

REGISTRY = CollectorRegistry()

LIMIT_EVALUATIONS = Counter(
    'mh_limit_evaluations_total',
    'Pointwise limit evaluations by provenance',
    ['provenance'],
    registry=REGISTRY,
)
SCHEDULE_STEPS = Counter(
    'mh_schedule_steps_total',
    'Raw sequence evaluations taken by limit schedules',
    registry=REGISTRY,
)
LIMIT_STEPS = Histogram(
    'mh_limit_steps',
    'Schedule steps taken before a batch converged',
    buckets=(4, 8, 12, 16, 20, 24, 32, 40, 64),
    registry=REGISTRY,
)
SPHERE_MINIMIZATIONS = Counter(
    'mh_sphere_minimizations_total',
    'Minimizations of a horofunction over a Minkowski sphere',
    registry=REGISTRY,
)
SUPPORT_MAXIMIZATIONS = Counter(
    'mh_support_maximizations_total',
    'Support function maximizations over the unit sphere',
    registry=REGISTRY,
)
DOMAIN_ERRORS = Counter(
    'mh_domain_errors_total',
    'Domain errors raised, by class',
    ['error'],
    registry=REGISTRY,
)


def write_metrics(directory: str) -> str:
    """Dump the registry in the text exposition format next to the run outputs"""
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, "metrics.prom")
    write_to_textfile(path, REGISTRY)
    logger.debug(f"Metrics written to {path}")
    return path
