import logging

# Root of every logger created by the library when the caller does not give one
DEFAULT_LOGGER_NAME = "spacetime"

# File records keep the experiment wall clock next to the module that produced them
FILE_FORMAT = "%(asctime)s %(name)s %(levelname)s %(message)s %(filename)s:%(lineno)d"
CONSOLE_FORMAT = "[$BOLD%(name)-17s$RESET][%(levelname)-7s] %(message)s ($BOLD%(filename)s$RESET:%(lineno)d) %(asctime)s"
DATE_FORMAT = "%d-%m-%y %H:%M:%S"

RESET_SEQ = "\033[0m"
BOLD_SEQ = "\033[1m"


def ansi_color(code: int) -> str:
    """ Bold foreground color, code is 0 (black) to 7 (white) """
    return f"\033[1;{30 + code}m"


def expand_markup(message: str, use_color: bool = True) -> str:
    """ Replace the $BOLD and $RESET markers of a format string """
    bold, reset = (BOLD_SEQ, RESET_SEQ) if use_color else ("", "")
    return message.replace("$RESET", reset).replace("$BOLD", bold)


class ColoredFormatter(logging.Formatter):
    # Long spectra and sweeps log at INFO, warnings flag oversized terms and caps
    LEVEL_COLORS = {"DEBUG": 4, "INFO": 7, "WARNING": 3, "ERROR": 1, "CRITICAL": 5}

    def __init__(self, use_color: bool = True):
        super().__init__(expand_markup(CONSOLE_FORMAT, use_color), DATE_FORMAT)
        self.__use_color = use_color

    def format(self, record: logging.LogRecord) -> str:
        # The file handler shares the record, color a copy
        record = logging.makeLogRecord(record.__dict__)
        if self.__use_color and record.levelname in self.LEVEL_COLORS:
            record.levelname = ansi_color(self.LEVEL_COLORS[record.levelname]) + record.levelname + RESET_SEQ
        return super().format(record)


class ConsoleLogger(logging.Logger):
    """ Child logger that owns the console handler, attached as a handler of the experiment logger """

    def __init__(self, name: str, console_handler: logging.Handler, use_color: bool = True):
        super().__init__(name, logging.DEBUG)
        console_handler.setFormatter(ColoredFormatter(use_color=use_color))
        self.addHandler(console_handler)


def logging_setup(logger_name: str = DEFAULT_LOGGER_NAME, log_file: str = "spacetime.log",
                  enable_color: bool = True) -> logging.Logger:
    """Logging setup for experiments and unit tests
    :param logger_name: parent logger name, the modules log under f"{logger_name}.{__name__}"
    :param log_file: file that receives INFO and above
    :param enable_color: use ANSI colors on the console
    :return: logger object
    """
    logger = logging.getLogger(logger_name)
    logger.setLevel(logging.DEBUG)
    # A second call from another test case reuses the handlers
    if logger.handlers:
        return logger
    file_handler = logging.FileHandler(log_file, mode='a')
    file_handler.setLevel(logging.INFO)
    file_handler.setFormatter(logging.Formatter(fmt=FILE_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(file_handler)

    console = ConsoleLogger(name=logger_name, console_handler=logging.StreamHandler(), use_color=enable_color)
    # noinspection PyTypeChecker
    logger.addHandler(console)
    return logger
