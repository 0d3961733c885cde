"""Adapter error family.

Everything raised on purpose derives from AdapterError so the CLI can
map "your inputs are wrong" to one exit code without a catalogue of
special cases.
"""


class AdapterError(Exception):
    """Base class for input and encoding failures."""


class LabelError(AdapterError):
    """An attribute value has no mapping to the engine enumerations."""


class InputError(AdapterError):
    """A file or directory is missing, unreadable, or malformed."""


class EncodeError(AdapterError):
    """The checkpoint cannot encode a given input (e.g. overflow)."""
