from prometheus_client import CollectorRegistry, Counter, write_to_textfile

REGISTRY = CollectorRegistry()

PREDICTION_COUNT = Counter(
    "hdlss_predictions_total", "Test points classified", ["rule"], registry=REGISTRY
)
REPETITION_COUNT = Counter(
    "hdlss_repetitions_total", "Experiment repetitions completed", ["kind"], registry=REGISTRY
)
ERROR_COUNT = Counter(
    "hdlss_errors_total", "Failures by stage", ["stage"], registry=REGISTRY
)


def write_metrics(path: str) -> None:
    write_to_textfile(path, REGISTRY)
