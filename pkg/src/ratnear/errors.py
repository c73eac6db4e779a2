"""Exception types shared by the library and the command line."""


class ValidationError(ValueError):
    """A parameter is outside its accepted range."""


class GuardError(RuntimeError):
    """A numeric or cost guard refused the request."""
