"""Exception types shared across the pipeline."""


class DataError(ValueError):
    """Input data is inconsistent, malformed or unusable.

    The CLI maps this to exit status 2.
    """


class VocabularyError(DataError, KeyError):
    """A token was looked up in a model that does not contain it."""

    def __init__(self, token, where="vocabulary"):
        self.token = token
        self.where = where
        super().__init__(f"token {token!r} not in {where}")

    def __str__(self):
        return self.args[0]
