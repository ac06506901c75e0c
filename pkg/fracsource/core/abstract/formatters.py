from __future__ import annotations

from typing import TYPE_CHECKING, Any, Callable, Optional

if TYPE_CHECKING:
    from fracsource.core.models.result import Result

FormatterFunc = Callable[["Result"], Any]

FORMATTERS_REGISTRY: dict[str, FormatterFunc] = {}


def register(
    display_name: Optional[str] = None, *, rich_console: bool = False
) -> Callable[[FormatterFunc], FormatterFunc]:
    """
    A decorator to register a result formatter.

    Args:
        display_name (str, optional): The name used for `--formatter`; defaults to the function name.
        rich_console (bool): Whether the formatter returns a rich renderable. Defaults to False.

    Returns:
        Callable[[FormatterFunc], FormatterFunc]: The decorator function.
    """

    def decorator(func: FormatterFunc) -> FormatterFunc:
        name = display_name or func.__name__
        if FORMATTERS_REGISTRY.get(name, func) is not func:
            raise ValueError(f"Formatter '{name}' is already registered")

        setattr(func, "__display_name__", name)
        setattr(func, "__rich_console__", rich_console)
        FORMATTERS_REGISTRY[name] = func
        return func

    return decorator


def find(name: str) -> FormatterFunc:
    """
    Find a formatter by name.

    Raises:
        ValueError: If no formatter is registered under the name.
    """

    from fracsource import formatters as _  # noqa: F401

    try:
        return FORMATTERS_REGISTRY[name]
    except KeyError as e:
        raise ValueError(f"Formatter '{name}' not found. Available formatters: {', '.join(list_available())}") from e


def list_available() -> list[str]:
    return list(FORMATTERS_REGISTRY)


__all__ = ["FormatterFunc", "register", "find", "list_available"]
