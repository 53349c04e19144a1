"""Exception hierarchy shared by every module."""


class TexMixError(Exception):
    """Base class for all errors raised by texmix."""


class InvalidInputError(TexMixError, ValueError):
    """An array argument has the wrong shape, size or contents."""


class NonRealResultError(TexMixError):
    """An inverse transform expected to be real carried an imaginary residue."""


class InvalidConfigError(TexMixError, ValueError):
    """A network or synthesis configuration is inconsistent."""


class WeightFileError(TexMixError):
    """Base class for TXW1 parse failures."""


class MagicMismatchError(WeightFileError):
    pass


class TruncatedFileError(WeightFileError):
    pass


class ChannelChainError(WeightFileError, InvalidConfigError):
    def __init__(self, layer_index, message):
        super().__init__(f"layer {layer_index}: {message}")
        self.layer_index = layer_index


class DivergenceError(TexMixError):
    def __init__(self, iteration, loss):
        super().__init__(f"loss became non-finite ({loss!r}) at iteration {iteration}")
        self.iteration = iteration
        self.loss = loss
