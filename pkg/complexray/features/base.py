"""Run settings exposed as click options."""

import click

from ..options import CONFIG, OPTIONS


class ClickOption:
    """Names and keyword arguments of one click option."""

    def __init__(self,
                 long_option,
                 short_option=None,
                 type=None,  # pylint: disable=redefined-builtin
                 multiple=False,
                 metavar=None,
                 help_text=''):
        self.long_option = long_option
        self.names = [name for name in (long_option, short_option) if name]
        self.multiple = multiple
        self.settings = {'type': type, 'multiple': multiple, 'metavar': metavar, 'help': help_text}

    def decorate(self, command):
        """Attach the option to a click command."""
        settings = {key: value for key, value in self.settings.items() if value is not None}
        return click.option(*self.names, **settings)(command)

    @property
    def argument_name(self):
        """Keyword argument click passes to the command.

        >>> ClickOption("--quad-n").argument_name
        'quad_n'
        >>> ClickOption("--ntheta").argument_name
        'ntheta'
        """
        return self.long_option[2:].replace('-', '_')


class BaseFeature:
    """One run setting.

    The command line wins over the ``--config`` file; when neither sets
    it the value is None and :class:`complexray.config.RunConfig`
    applies its default.
    """

    OPTION_NAME = None
    CLICK_OPTION = None
    CONVERT = str

    def bind(self, command):
        """Add this setting's option to the command."""
        return self.CLICK_OPTION.decorate(command)

    def extract_option(self, kwargs):
        """Move the parsed value from kwargs into OPTIONS.

        An absent flag keeps the stored value, so options can be passed
        both before and after the subcommand.
        """
        new_value = kwargs.pop(self.CLICK_OPTION.argument_name)
        if new_value is None or (self.CLICK_OPTION.multiple and not new_value):
            return
        OPTIONS[self.OPTION_NAME] = new_value

    def convert(self, raw):
        """Convert config file text to option value.

        >>> Threads().convert('4')
        4
        """
        if self.CLICK_OPTION.multiple:
            return tuple(self.CONVERT(item) for item in raw)
        return self.CONVERT(raw)

    @property
    def value(self):
        """Flag value, else config file value, else None."""
        value = OPTIONS.get(self.OPTION_NAME)
        if value is None and self.OPTION_NAME in CONFIG:
            try:
                value = self.convert(CONFIG[self.OPTION_NAME])
            except ValueError as exc:
                raise click.UsageError(
                    f"Invalid value for {self.OPTION_NAME} in config file: {CONFIG[self.OPTION_NAME]!r}"
                ) from exc
        return value

    @value.setter
    def value(self, new_value):
        OPTIONS[self.OPTION_NAME] = new_value


class Threads(BaseFeature):
    """Cap on worker threads."""

    OPTION_NAME = 'threads'
    CLICK_OPTION = ClickOption(
        long_option='--threads',
        short_option='-j',
        type=int,
        metavar='INTEGER',
        help_text='Maximum number of worker threads (default 1). '
                  'Outputs do not depend on it.',
    )
    CONVERT = int
