__all__ = [
    "ui_style",
]


ui_style = {
    # Verdicts and membership answers.
    "stable": "bold #44aa44",
    "unstable": "bold #ff4444",
    "yes": "#44aa44",
    "no": "#ff4444",
    "failed": "reverse #ff4444",
    "infeasible": "#888888",
    # Tables.
    "header": "bold underline",
    "flow": "#44aaff",
    "number": "#ccaa00",
    "path": "underline #aa8844",
    # Diagnostics on stderr.
    "error": "bold #ff4444",
    # Help.
    "title": "bold #44aaff",
    "subtitle": "bold #8800ff",
    "line": "#888888",
    "keys": "#44aaff",
    "version": "#8800ff",
}
