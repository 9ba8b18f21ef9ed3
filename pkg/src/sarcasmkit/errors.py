"""Exception types raised across the toolkit."""


class SarcasmKitError(Exception):
    """Base class for every error the toolkit raises on purpose."""


class MissingColumn(SarcasmKitError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class EmptyText(SarcasmKitError, ValueError):
    pass


class BadLabel(SarcasmKitError, ValueError):
    pass


class DegenerateSplit(SarcasmKitError, ValueError):
    pass


class VocabOverflow(SarcasmKitError, IndexError):
    pass


class AllMasked(SarcasmKitError, ValueError):
    pass


class ShapeMismatch(SarcasmKitError, ValueError):
    pass


class BadCategory(SarcasmKitError, ValueError):
    pass


class NonFiniteLoss(SarcasmKitError, FloatingPointError):
    pass


class TaskMismatch(SarcasmKitError, ValueError):
    pass


class EmptyEnsemble(SarcasmKitError, ValueError):
    pass


class LengthMismatch(SarcasmKitError, ValueError):
    pass


class EmptyInput(SarcasmKitError, ValueError):
    pass
