import os

import pytest
from hypothesis import HealthCheck, settings

from sketchsel.data import (
    MulticlassDesign,
    TokenStreamDesign,
    format_libsvm,
    format_token_line,
    synthetic_multiclass,
    synthetic_token_stream,
)

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", parent=settings.get_profile("default"), max_examples=500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def _write(path, lines):
    path.write_text("".join(line + "\n" for line in lines))
    return path


@pytest.fixture(scope="session")
def binary_files(tmp_path_factory):
    """Train/test libsvm files with 100 planted features in a 2**12 id space."""
    root = tmp_path_factory.mktemp("binary")
    ts = synthetic_token_stream(TokenStreamDesign(n=3000, bits=12, vocabulary=5000, seed=11))
    train = _write(root / "train.svm", (format_libsvm(e) for e in ts.examples[:2400]))
    test = _write(root / "test.svm", (format_libsvm(e) for e in ts.examples[2400:]))
    return train, test, ts


@pytest.fixture(scope="session")
def multiclass_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("multi")
    exs, _ = synthetic_multiclass(MulticlassDesign(n=1200, classes=4, p=1 << 12, seed=5))
    train = _write(root / "train.svm", (format_libsvm(e) for e in exs[:1000]))
    test = _write(root / "test.svm", (format_libsvm(e) for e in exs[1000:]))
    return train, test


@pytest.fixture(scope="session")
def token_file(tmp_path_factory):
    root = tmp_path_factory.mktemp("tokens")
    rows = [(1, ["good", "great"]), (-1, ["bad", "awful"])] * 50
    return _write(root / "reviews.tok", (format_token_line(y, toks) for y, toks in rows))


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(LINES):
            terminalreporter.write_line(LINES[n])
