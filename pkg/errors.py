"""Exceptions raised by the confweave pipeline.

Parse and validation problems are never raised; they travel as Diagnostic
records (see adl.py). These exceptions cover the compile and solve stages.
"""


class ConfweaveError(Exception):
    """Base class for all confweave errors"""


class DepthExceeded(ConfweaveError):
    """A requirement chain is deeper than the depth limit (cyclic or too-deep library)"""

    def __init__(self, path, depth_limit):
        self.path = path
        self.depth_limit = depth_limit
        super().__init__(f"requirement chain exceeds depth limit {depth_limit} at '{path}'")


class UnknownVariable(ConfweaveError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown component variable '{name}'")


class InvalidPreference(ConfweaveError):
    def __init__(self, path, value):
        self.path = path
        self.value = value
        super().__init__(f"value {value!r} is not in the domain of '{path}'")


class EmptyModel(ConfweaveError):
    def __init__(self):
        super().__init__("constraint model has no variables")


class MalformedAssignment(ConfweaveError):
    """Assignment does not cover every CSP variable"""

    def __init__(self, missing):
        self.missing = list(missing)
        shown = ", ".join(str(m) for m in self.missing[:5])
        more = "" if len(self.missing) <= 5 else f" (+{len(self.missing) - 5} more)"
        super().__init__(f"assignment is not total; missing {shown}{more}")


class InvalidEncoding(ConfweaveError):
    def __init__(self, filename, offset):
        self.filename = filename
        self.offset = offset
        super().__init__(f"input is not valid UTF-8 (byte offset {offset})")


class InvalidOrderFile(ConfweaveError):
    """Order file is valid JSON but not {"vars": [str...], "values": {str: [str...]}}"""

    def __init__(self, filename, reason):
        self.filename = filename
        self.reason = reason
        super().__init__(f"malformed order file: {reason}")
