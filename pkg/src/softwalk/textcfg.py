"""Minimal structured-text config format shared by all on-disk artifacts.

Files are sequences of [section] blocks with `key = value` lines; section
names may repeat ([link], [joint], [event], ...). Values are whitespace
separated tokens. Errors carry the offending line number.
"""


class ConfigError(ValueError):
    def __init__(self, message, line=None, path=None):
        where = f"{path or '<config>'}:{line}" if line is not None else (path or "<config>")
        super().__init__(f"{where}: {message}")
        self.line = line
        self.path = path


class Section:
    def __init__(self, name, line):
        self.name = name
        self.line = line
        self.values = {}   # key -> raw string
        self.lines = {}    # key -> line number

    _REQUIRED = object()

    def has(self, key):
        return key in self.values

    def _raw(self, key, default):
        if key in self.values:
            return self.values[key]
        if default is Section._REQUIRED:
            raise ConfigError(f"section [{self.name}] is missing key '{key}'", self.line)
        return None

    def get_str(self, key, default=_REQUIRED):
        raw = self._raw(key, default)
        return raw if raw is not None else default

    def get_float(self, key, default=_REQUIRED):
        raw = self._raw(key, default)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"key '{key}' is not a number: {raw!r}", self.lines.get(key, self.line)) from None

    def get_int(self, key, default=_REQUIRED):
        raw = self._raw(key, default)
        if raw is None:
            return default
        try:
            return int(round(float(raw)))
        except ValueError:
            raise ConfigError(f"key '{key}' is not a number: {raw!r}", self.lines.get(key, self.line)) from None

    def get_bool(self, key, default=_REQUIRED):
        raw = self._raw(key, default)
        if raw is None:
            return default
        low = raw.strip().lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"key '{key}' is not a boolean: {raw!r}", self.lines.get(key, self.line))

    def get_floats(self, key, count=None, default=_REQUIRED):
        raw = self._raw(key, default)
        if raw is None:
            return default
        try:
            vals = [float(tok) for tok in raw.split()]
        except ValueError:
            raise ConfigError(f"key '{key}' has non-numeric entries: {raw!r}", self.lines.get(key, self.line)) from None
        if count is not None and len(vals) != count:
            raise ConfigError(
                f"key '{key}' expects {count} values, got {len(vals)}", self.lines.get(key, self.line)
            )
        return vals


def parse_text(text, path=None):
    """Parse config text into an ordered list of Sections."""
    sections = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ConfigError(f"malformed section header: {raw.strip()!r}", lineno, path)
            current = Section(line[1:-1].strip(), lineno)
            sections.append(current)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value': {raw.strip()!r}", lineno, path)
        if current is None:
            raise ConfigError("key/value pair before any [section]", lineno, path)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", lineno, path)
        if key in current.values:
            raise ConfigError(f"duplicate key '{key}' in section [{current.name}]", lineno, path)
        current.values[key] = value
        current.lines[key] = lineno
    return sections


def parse_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_text(fh.read(), path=str(path))


def single_section(sections, name, path=None):
    found = [s for s in sections if s.name == name]
    if len(found) != 1:
        raise ConfigError(f"expected exactly one [{name}] section, found {len(found)}", path=path)
    return found[0]
