import os
from dotenv import load_dotenv

from hdlss.errors import ConfigError

load_dotenv()


def _env_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    return raw.strip().lower() not in ["0", "false", "no", "off", ""]


class Config:
    # =========================
    # Parallelism + seeding
    # =========================
    HDLSS_THREADS = int(os.getenv("HDLSS_THREADS", str(os.cpu_count() or 1)))

    # Unset means "generate one and print it"
    HDLSS_SEED = os.getenv("HDLSS_SEED")

    # =========================
    # Simulation protocol defaults
    # =========================
    DEFAULT_DIMS_TEXT = os.getenv("HDLSS_DIMS", "5,10,25,50,100,250,500,1000")
    DEFAULT_REPS = int(os.getenv("HDLSS_REPS", "100"))
    TRAIN_PER_CLASS = int(os.getenv("HDLSS_TRAIN_PER_CLASS", "20"))
    TEST_PER_CLASS = int(os.getenv("HDLSS_TEST_PER_CLASS", "100"))

    # Real-data protocol: stratified 50/50 splits
    SPLIT_FRACTION = float(os.getenv("HDLSS_SPLIT_FRACTION", "0.5"))

    # =========================
    # Output + observability
    # =========================
    LOG_LEVEL = os.getenv("HDLSS_LOG_LEVEL", "INFO")
    RESULTS_DIR = os.getenv("HDLSS_RESULTS_DIR", "results")
    METRICS_PATH = os.getenv("HDLSS_METRICS_PATH")
    SHOW_PROGRESS = _env_bool("HDLSS_PROGRESS", True)

    @staticmethod
    def parse_dims(text: str) -> list:
        parts = [p.strip() for p in str(text).split(",") if p.strip()]
        if not parts:
            raise ConfigError("dims list is empty")
        dims = []
        for p in parts:
            try:
                d = int(p)
            except ValueError:
                raise ConfigError(f"dimension {p!r} is not an integer") from None
            if d < 1:
                raise ConfigError(f"dimension must be >= 1, got {d}")
            dims.append(d)
        return dims

    @classmethod
    def default_dims(cls) -> list:
        return cls.parse_dims(cls.DEFAULT_DIMS_TEXT)
