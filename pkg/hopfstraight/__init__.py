try:
    import dotenv
except ModuleNotFoundError:
    pass
else:
    if dotenv.find_dotenv(usecwd=True):
        dotenv.load_dotenv(dotenv.find_dotenv(usecwd=True), override=False)


from hopfstraight import log


# The TRACE level has to exist before any module asks for a logger.
log.register_trace_level()

__version__ = "1.0.0"
