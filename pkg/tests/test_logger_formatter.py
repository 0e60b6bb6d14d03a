import logging
import unittest

from spacetime.logger_formatter import RESET_SEQ, ColoredFormatter, expand_markup, logging_setup


class LoggerFormatterTestCase(unittest.TestCase):
    def test_markup(self):
        self.assertEqual(expand_markup("$BOLDgap$RESET", use_color=False), "gap")
        self.assertEqual(expand_markup("$BOLDgap$RESET"), "\033[1mgap" + RESET_SEQ)

    def test_colored_copy(self):
        record = logging.LogRecord("spacetime.hamiltonian", logging.WARNING, "hamiltonian.py", 10,
                                   "term touches 12 qubits", None, None)
        colored = ColoredFormatter().format(record)
        self.assertIn("\033[1;33mWARNING", colored)
        self.assertEqual(record.levelname, "WARNING")
        plain = ColoredFormatter(use_color=False).format(record)
        self.assertNotIn("\033", plain)
        self.assertIn("term touches 12 qubits", plain)

    def test_setup_once(self):
        logger = logging_setup(logger_name="LOGGER_FORMATTER", log_file="unit_test_log_LoggerFormatter.log")
        handlers = list(logger.handlers)
        again = logging_setup(logger_name="LOGGER_FORMATTER", log_file="unit_test_log_LoggerFormatter.log")
        self.assertIs(again, logger)
        self.assertEqual(again.handlers, handlers)
        self.assertEqual(len(handlers), 2)


if __name__ == '__main__':
    unittest.main()
