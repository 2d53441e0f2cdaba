"""Shared fixtures."""

import pytest

from berwald_scalar.utils import _reset_logger


@pytest.fixture(autouse=True)
def isolated_log(mocker, tmp_path):
    """Send log output to a temporary file for every test."""
    _reset_logger()
    log_file = tmp_path / "logs" / "berwald_scalar.log"
    mocker.patch("berwald_scalar.config.LOG_FILE", log_file)
    yield log_file
    _reset_logger()
