"""Command-line harness: configuration, runs, verification and refinement studies."""

from fracvolterra.harness.config import ConfigError, RunConfig, build_config, parse_config
from fracvolterra.harness.suites import CheckResult, run_suite

__all__ = ["ConfigError", "RunConfig", "build_config", "parse_config",
           "CheckResult", "run_suite"]
