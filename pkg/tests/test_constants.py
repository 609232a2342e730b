import logging

import pytest

from hopfstraight import constants, log
from hopfstraight.constants import Tolerances


class TestTolerances:
    def test_override_and_reset(self):
        active = constants.set_tolerances(analytic=1e-6, sato=0.1)
        assert constants.tolerances() is active
        assert (active.analytic, active.sato) == (1e-6, 0.1)
        assert active.torsion == Tolerances().torsion
        assert constants.reset_tolerances() == Tolerances()

    @pytest.mark.parametrize("overrides", [{"nonsense": 1.0}, {"analytic": 0.0}, {"hinge": -1e-3}])
    def test_invalid_overrides(self, overrides):
        before = constants.tolerances()
        with pytest.raises(ValueError):
            constants.set_tolerances(**overrides)
        assert constants.tolerances() is before

    def test_thread_count_is_positive(self):
        assert constants.Toolkit.threads >= 1


class TestLogging:
    def test_trace_level(self, caplog):
        log.register_trace_level()
        assert logging.getLevelName(log.TRACE_LEVEL) == "TRACE"
        logger = log.get_logger("hopfstraight.tests")
        with caplog.at_level(log.TRACE_LEVEL, logger="hopfstraight.tests"):
            logger.trace("fiber %d", 3)
        assert [record.getMessage() for record in caplog.records] == ["fiber 3"]

    def test_trace_loggers(self, monkeypatch):
        monkeypatch.setattr(constants.Toolkit, "trace_loggers", "hopfstraight.grassmann,hopfstraight.numkit")
        log._set_trace_loggers()
        try:
            assert logging.getLogger("hopfstraight.numkit").level == log.TRACE_LEVEL
        finally:
            for name in ("hopfstraight.grassmann", "hopfstraight.numkit"):
                logging.getLogger(name).setLevel(logging.NOTSET)

    def test_setup_levels(self):
        root = logging.getLogger()
        previous = root.level
        try:
            log.setup(debug=True)
            assert root.level == logging.DEBUG
            log.setup(debug=False)
            assert root.level == logging.INFO
        finally:
            root.setLevel(previous)
