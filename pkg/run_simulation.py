"""Regenerate the full simulation study: every example over the default grid.

Results land in Config.RESULTS_DIR as example_<k>.json / .csv / _plot.csv.
"""
import os
import sys
import logging

from hdlss.config import Config
from hdlss.distributions import new_master_seed
from hdlss.experiments import (
    ExperimentConfig,
    format_table,
    run_simulation,
    save_result,
    write_plot_data,
    write_results_csv,
)
from hdlss.monitoring import write_metrics


def run_all(seed: int):
    os.makedirs(Config.RESULTS_DIR, exist_ok=True)
    for example_id in range(1, 6):
        print(f"🔹 Example {example_id} (seed {seed})...")
        cfg = ExperimentConfig(
            example_id=example_id,
            master_seed=seed,
            threads=Config.HDLSS_THREADS,
            show_progress=Config.SHOW_PROGRESS,
        )
        res = run_simulation(cfg)
        base = os.path.join(Config.RESULTS_DIR, f"example_{example_id}")
        save_result(res, base + ".json")
        write_results_csv(res, base + ".csv")
        write_plot_data(res, base + "_plot.csv")
        print(format_table(res))
        print(f"✅ Saved {base}.json")


if __name__ == "__main__":
    logging.basicConfig(level=Config.LOG_LEVEL)
    seed = int(Config.HDLSS_SEED) if Config.HDLSS_SEED else new_master_seed()
    print("seed:", seed)
    try:
        run_all(seed)
    finally:
        if Config.METRICS_PATH:
            write_metrics(Config.METRICS_PATH)
    sys.exit(0)
