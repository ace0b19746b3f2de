"""Single-call execution harness.

Reads one JSON request on stdin, runs the candidate entry point on the given
argument literals, and writes exactly one JSON response line on stdout.
Errors are reported as data; the process exits 0 for every handled outcome.

Confinement is best-effort: pruned builtins, blocked process/network modules,
a throwaway working directory and discarded candidate output. Hostile code is
outside the threat model.
"""

import builtins as _builtins
import math
import os
import signal
import sys
import time

MAX_ERR_BYTES = 2048
MAX_CANON_DEPTH = 50

BLOCKED_MODULES = {
    "subprocess", "socket", "ssl", "http", "urllib", "ftplib", "smtplib",
    "multiprocessing", "ctypes", "cffi", "pty", "asyncio", "shutil",
    "webbrowser", "telnetlib", "poplib", "imaplib", "nntplib",
}

_real_exit = os._exit
_saved_os = {}

LITERAL_BUILTINS = {
    name: getattr(_builtins, name)
    for name in (
        "set", "frozenset", "float", "int", "str", "list", "tuple", "dict",
        "range", "bool", "complex", "bytes", "abs", "len", "sorted",
        "reversed", "min", "max", "sum", "chr", "ord", "map", "zip",
    )
}


class HarnessTimeout(BaseException):
    pass


class CanonDepthError(Exception):
    pass


# Set once the deadline alarm has fired, so code that catches the timeout
# and returns normally is still reported as timed out.
_FIRED = [False]

# How long the supervisor waits past the deadline before killing the child.
SUPERVISOR_GRACE_S = 0.1


def _on_alarm(signum, frame):
    _FIRED[0] = True
    raise HarnessTimeout()


def truncate(text):
    data = text.encode("utf-8", "replace")
    if len(data) <= MAX_ERR_BYTES:
        return text
    return data[:MAX_ERR_BYTES].decode("utf-8", "ignore")


# ---------------------------------------------------------------- canonical form

def canonicalize(value, depth=0):
    if depth > MAX_CANON_DEPTH:
        raise CanonDepthError("canonicalization depth exceeded")
    if value is None or isinstance(value, bool):
        return repr(value)
    if isinstance(value, int):
        return repr(int(value))
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, complex):
        return repr(complex(value))
    if isinstance(value, (str, bytes)):
        return repr(value)
    if isinstance(value, tuple):
        items = [canonicalize(v, depth + 1) for v in value]
        if len(items) == 1:
            return "(" + items[0] + ",)"
        return "(" + ", ".join(items) + ")"
    if isinstance(value, list) or type(value).__name__ == "deque":
        return "[" + ", ".join(canonicalize(v, depth + 1) for v in value) + "]"
    if isinstance(value, dict):
        pairs = sorted(
            (canonicalize(k, depth + 1), canonicalize(v, depth + 1))
            for k, v in value.items()
        )
        return "{" + ", ".join(k + ": " + v for k, v in pairs) + "}"
    if isinstance(value, (set, frozenset)):
        items = sorted(canonicalize(v, depth + 1) for v in value)
        if isinstance(value, frozenset):
            return "frozenset({" + ", ".join(items) + "})" if items else "frozenset()"
        return "{" + ", ".join(items) + "}" if items else "set()"
    return type(value).__name__


# ---------------------------------------------------------------- equality

def _is_number(x):
    return isinstance(x, (int, float, complex)) and not isinstance(x, bool)


def _num_equal(a, b, abs_tol, rel_tol):
    if isinstance(a, complex) or isinstance(b, complex):
        a, b = complex(a), complex(b)
        if a == b:
            return True
        return abs(a - b) <= max(abs_tol, rel_tol * max(abs(a), abs(b)))
    if isinstance(a, int) and isinstance(b, int):
        return a == b
    a, b = float(a), float(b)
    if math.isnan(a) or math.isnan(b):
        return math.isnan(a) and math.isnan(b)
    if a == b:
        return True
    if math.isinf(a) or math.isinf(b):
        return False
    return abs(a - b) <= max(abs_tol, rel_tol * max(abs(a), abs(b)))


def _unordered_match(xs, ys, abs_tol, rel_tol):
    if len(xs) != len(ys):
        return False
    remaining = list(ys)
    for x in xs:
        for i, y in enumerate(remaining):
            if judge_equal(x, y, abs_tol, rel_tol):
                del remaining[i]
                break
        else:
            return False
    return True


def judge_equal(a, b, abs_tol, rel_tol, depth=0):
    if depth > MAX_CANON_DEPTH:
        raise CanonDepthError("comparison depth exceeded")
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if _is_number(a) and _is_number(b):
        return _num_equal(a, b, abs_tol, rel_tol)
    seq = (list, tuple)
    if isinstance(a, seq) and isinstance(b, seq):
        return len(a) == len(b) and all(
            judge_equal(x, y, abs_tol, rel_tol, depth + 1) for x, y in zip(a, b)
        )
    if isinstance(a, (set, frozenset)) and isinstance(b, (set, frozenset)):
        if a == b:
            return True
        return _unordered_match(list(a), list(b), abs_tol, rel_tol)
    if isinstance(a, dict) and isinstance(b, dict):
        if set(a.keys()) != set(b.keys()):
            return False
        return all(judge_equal(a[k], b[k], abs_tol, rel_tol, depth + 1) for k in a)
    if type(a) in (str, bytes, type(None)) or type(b) in (str, bytes, type(None)):
        return type(a) is type(b) and a == b
    if isinstance(a, (list, tuple, set, frozenset, dict)) or isinstance(
        b, (list, tuple, set, frozenset, dict)
    ):
        return False
    return bool(a == b)


# ---------------------------------------------------------------- confinement

class _Blocker:
    def find_spec(self, name, path=None, target=None):
        if name.split(".")[0] in BLOCKED_MODULES:
            raise ImportError("module '%s' is blocked in the harness" % name)
        return None


def _blocked(*args, **kwargs):
    raise PermissionError("operation blocked in the harness")


def confine():
    sys.meta_path.insert(0, _Blocker())
    for mod in list(sys.modules):
        if mod.split(".")[0] in BLOCKED_MODULES:
            del sys.modules[mod]
    for name in ("system", "popen", "fork", "forkpty", "execv", "execve",
                 "execvp", "execvpe", "execl", "execle", "execlp", "spawnv",
                 "spawnve", "spawnl", "kill", "killpg", "_exit", "remove",
                 "unlink", "rmdir", "removedirs", "rename", "replace", "chdir",
                 "putenv"):
        if hasattr(os, name):
            _saved_os[name] = getattr(os, name)
            setattr(os, name, _blocked)
    try:
        import resource
        limit = 2 * 1024 * 1024 * 1024
        resource.setrlimit(resource.RLIMIT_AS, (limit, limit))
    except Exception:
        pass


def _rmtree_quiet(jail):
    try:
        _rmtree(jail)
    except Exception:
        pass


def _rmtree(path):
    for entry in os.scandir(path):
        try:
            if entry.is_dir(follow_symlinks=False):
                _rmtree(entry.path)
            else:
                os.unlink(entry.path)
        except OSError:
            pass
    os.rmdir(path)


def make_jail():
    base = os.environ.get("TMPDIR") or "/tmp"
    path = os.path.join(base, "utd-%d-%s" % (os.getpid(), os.urandom(6).hex()))
    os.mkdir(path, 0o700)
    return os.path.realpath(path)


def _guarded_open(real_open, jail):
    def _open(file, mode="r", *args, **kwargs):
        if any(c in mode for c in "wax+") and isinstance(file, (str, bytes, os.PathLike)):
            target = os.path.realpath(os.fspath(file))
            if isinstance(target, bytes):
                target = target.decode("utf-8", "replace")
            if not target.startswith(jail + os.sep):
                raise PermissionError("writes outside the working directory are blocked")
        return real_open(file, mode, *args, **kwargs)
    return _open


# ---------------------------------------------------------------- wire codec
# A small JSON reader/writer; the stdlib json module costs more start-up
# time than the rest of the harness combined.

_ESCAPES = {'"': '"', "\\": "\\", "/": "/", "b": "\b", "f": "\f", "n": "\n", "r": "\r", "t": "\t"}
_NUMBER_CHARS = set("+-0123456789.eE")
_WS = " \t\n\r"


class _Reader:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def fail(self, what):
        raise ValueError("bad JSON at offset %d: %s" % (self.pos, what))

    def skip_ws(self):
        text, pos = self.text, self.pos
        while pos < len(text) and text[pos] in _WS:
            pos += 1
        self.pos = pos

    def value(self, depth=0):
        if depth > 64:
            self.fail("nesting too deep")
        self.skip_ws()
        if self.pos >= len(self.text):
            self.fail("unexpected end")
        c = self.text[self.pos]
        if c == "{":
            return self.obj(depth)
        if c == "[":
            return self.arr(depth)
        if c == '"':
            return self.string()
        for word, val in (("true", True), ("false", False), ("null", None)):
            if self.text.startswith(word, self.pos):
                self.pos += len(word)
                return val
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] in _NUMBER_CHARS:
            self.pos += 1
        num = self.text[start:self.pos]
        if not num:
            self.fail("unexpected character")
        try:
            return int(num)
        except ValueError:
            pass
        try:
            return float(num)
        except ValueError:
            self.fail("bad number")

    def expect(self, c):
        self.skip_ws()
        if not self.text.startswith(c, self.pos):
            self.fail("expected %r" % c)
        self.pos += 1

    def obj(self, depth):
        self.pos += 1
        out = {}
        self.skip_ws()
        if self.text.startswith("}", self.pos):
            self.pos += 1
            return out
        while True:
            self.skip_ws()
            if not self.text.startswith('"', self.pos):
                self.fail("expected key")
            key = self.string()
            self.expect(":")
            out[key] = self.value(depth + 1)
            self.skip_ws()
            if self.text.startswith(",", self.pos):
                self.pos += 1
                continue
            self.expect("}")
            return out

    def arr(self, depth):
        self.pos += 1
        out = []
        self.skip_ws()
        if self.text.startswith("]", self.pos):
            self.pos += 1
            return out
        while True:
            out.append(self.value(depth + 1))
            self.skip_ws()
            if self.text.startswith(",", self.pos):
                self.pos += 1
                continue
            self.expect("]")
            return out

    def hex4(self):
        chunk = self.text[self.pos:self.pos + 4]
        if len(chunk) != 4 or any(c not in "0123456789abcdefABCDEF" for c in chunk):
            self.fail("bad unicode escape")
        self.pos += 4
        return int(chunk, 16)

    def string(self):
        self.pos += 1
        parts = []
        text = self.text
        while True:
            end = self.pos
            while end < len(text) and text[end] not in '"\\':
                end += 1
            parts.append(text[self.pos:end])
            if end >= len(text):
                self.pos = end
                self.fail("unterminated string")
            self.pos = end + 1
            if text[end] == '"':
                return "".join(parts)
            esc = text[self.pos:self.pos + 1]
            self.pos += 1
            if esc in _ESCAPES:
                parts.append(_ESCAPES[esc])
            elif esc == "u":
                cp = self.hex4()
                if 0xD800 <= cp < 0xDC00 and text.startswith("\\u", self.pos):
                    self.pos += 2
                    low = self.hex4()
                    if 0xDC00 <= low < 0xE000:
                        cp = 0x10000 + ((cp - 0xD800) << 10) + (low - 0xDC00)
                    else:
                        parts.append("\ufffd")
                        cp = low
                if 0xD800 <= cp < 0xE000:
                    cp = 0xFFFD
                parts.append(chr(cp))
            else:
                self.fail("bad escape")


def json_loads(text):
    reader = _Reader(text)
    value = reader.value()
    reader.skip_ws()
    if reader.pos != len(text):
        reader.fail("trailing data")
    return value


def _dump_str(s):
    out = ['"']
    for ch in s:
        o = ord(ch)
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif o < 0x20:
            out.append("\\u%04x" % o)
        elif 0xD800 <= o < 0xE000:
            out.append("\\ufffd")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def json_dumps_flat(obj):
    """Serializes a dict of str/int/bool/None values."""
    items = []
    for key, val in obj.items():
        if val is None:
            enc = "null"
        elif val is True:
            enc = "true"
        elif val is False:
            enc = "false"
        elif isinstance(val, int):
            enc = str(val)
        else:
            enc = _dump_str(val)
        items.append(_dump_str(key) + ": " + enc)
    return "{" + ", ".join(items) + "}"


# ---------------------------------------------------------------- request handling

def eval_literal(text):
    return eval(text, {"__builtins__": dict(LITERAL_BUILTINS), "inf": float("inf"), "nan": float("nan")}, {})


def respond(out_fd, started, status, value_canon=None, equal=None,
            error_type=None, error_msg=None):
    resp = {
        "status": status,
        "value_canon": value_canon,
        "equal": equal,
        "error_type": error_type,
        "error_msg": truncate(error_msg) if error_msg is not None else None,
        "duration_ms": int((time.monotonic() - started) * 1000),
    }
    data = (json_dumps_flat(resp) + "\n").encode("utf-8")
    while data:
        n = os.write(out_fd, data)
        data = data[n:]


def handle(req, jail):
    mode = req.get("mode")
    code = req.get("code")
    entry = req.get("entry_point")
    args_expr = req.get("args_expr")
    expected_expr = req.get("expected_expr")
    abs_tol = float(req.get("float_abs_tol", 1e-6))
    rel_tol = float(req.get("float_rel_tol", 1e-6))
    if mode not in ("call", "check") or not isinstance(code, str) or not isinstance(entry, str) \
            or not isinstance(args_expr, list) or not all(isinstance(a, str) for a in args_expr):
        return ("load_error", None, None, "bad_request", "malformed harness request")
    if mode == "check" and not isinstance(expected_expr, str):
        return ("load_error", None, None, "bad_request", "check mode requires expected_expr")

    try:
        args = [eval_literal(a) for a in args_expr]
        expected = eval_literal(expected_expr) if mode == "check" else None
    except HarnessTimeout:
        raise
    except BaseException as exc:
        return ("arg_error", None, None, type(exc).__name__, str(exc))

    safe_builtins = dict(vars(_builtins))
    safe_builtins["open"] = _guarded_open(_builtins.open, jail)
    safe_builtins["input"] = _blocked
    safe_builtins["exit"] = _blocked
    safe_builtins["quit"] = _blocked
    namespace = {"__builtins__": safe_builtins, "__name__": "__candidate__"}
    try:
        compiled = compile(code, "<candidate>", "exec")
        exec(compiled, namespace)
    except HarnessTimeout:
        raise
    except BaseException as exc:
        return ("load_error", None, None, type(exc).__name__, str(exc))
    func = namespace.get(entry)
    if not callable(func):
        return ("load_error", None, None, "missing_entry_point",
                "entry point '%s' is not defined" % entry)

    try:
        result = func(*args)
    except HarnessTimeout:
        raise
    except BaseException as exc:
        return ("exception", None, None, type(exc).__name__, str(exc))

    try:
        canon = canonicalize(result)
    except CanonDepthError as exc:
        return ("exception", None, None, "canon_depth", str(exc))
    except RecursionError as exc:
        return ("exception", None, None, "canon_depth", str(exc))
    if mode == "call":
        return ("ok", canon, None, None, None)
    try:
        equal = bool(judge_equal(result, expected, abs_tol, rel_tol))
    except HarnessTimeout:
        raise
    except BaseException as exc:
        return ("ok", canon, False, type(exc).__name__, str(exc))
    return ("ok", canon, equal, None, None)


def run_child(req, jail, out_fd, started, timeout_ms):
    os.chdir(jail)
    confine()
    signal.signal(signal.SIGALRM, _on_alarm)
    signal.setitimer(signal.ITIMER_REAL, timeout_ms / 1000.0)
    try:
        outcome = handle(req, jail)
    except HarnessTimeout:
        outcome = ("timeout", None, None, "timeout", "exceeded %d ms" % timeout_ms)
    except BaseException as exc:
        outcome = ("exception", None, None, type(exc).__name__, str(exc))
    finally:
        try:
            signal.setitimer(signal.ITIMER_REAL, 0)
        except HarnessTimeout:
            outcome = ("timeout", None, None, "timeout", "exceeded %d ms" % timeout_ms)
    if _FIRED[0]:
        # the candidate caught the deadline and carried on
        outcome = ("timeout", None, None, "timeout", "exceeded %d ms" % timeout_ms)
    status, canon, equal, err_type, err_msg = outcome
    try:
        respond(out_fd, started, status, canon, equal, err_type, err_msg)
    except HarnessTimeout:
        respond(out_fd, started, "timeout", error_type="timeout",
                error_msg="exceeded %d ms" % timeout_ms)


def supervise(pid, read_fd, started, timeout_ms):
    """Collects the child's response line, or None when the child missed
    the deadline (it is killed) or died without answering."""
    import select
    deadline = started + timeout_ms / 1000.0 + SUPERVISOR_GRACE_S
    chunks = []
    while True:
        left = deadline - time.monotonic()
        if left <= 0:
            break
        ready, _, _ = select.select([read_fd], [], [], left)
        if not ready:
            break
        chunk = os.read(read_fd, 65536)
        if not chunk:
            break
        chunks.append(chunk)
    data = b"".join(chunks)
    complete = data.endswith(b"\n") and data.count(b"\n") == 1
    if not complete:
        try:
            os.kill(pid, signal.SIGKILL)
        except OSError:
            pass
    os.waitpid(pid, 0)
    return data if complete else None


def main():
    started = time.monotonic()
    out_fd = os.dup(1)
    devnull = os.open(os.devnull, os.O_WRONLY)
    os.dup2(devnull, 1)
    sys.stdout = open(os.devnull, "w")

    try:
        raw = sys.stdin.read()
        req = json_loads(raw)
        if not isinstance(req, dict):
            raise ValueError("request must be a JSON object")
    except Exception as exc:
        respond(out_fd, started, "load_error", error_type="bad_request", error_msg=str(exc))
        return
    sys.stdin = open(os.devnull, "r")

    timeout_ms = req.get("timeout_ms", 5000)
    if not isinstance(timeout_ms, (int, float)) or timeout_ms <= 0:
        respond(out_fd, started, "load_error", error_type="bad_request",
                error_msg="timeout_ms must be positive")
        return

    jail = make_jail()
    read_fd, write_fd = os.pipe()
    pid = os.fork()
    if pid == 0:
        os.close(read_fd)
        try:
            run_child(req, jail, write_fd, started, timeout_ms)
        finally:
            _real_exit(0)
    os.close(write_fd)
    line = supervise(pid, read_fd, started, timeout_ms)
    _rmtree_quiet(jail)
    if line is not None:
        os.write(out_fd, line)
    elif time.monotonic() - started >= timeout_ms / 1000.0:
        respond(out_fd, started, "timeout", error_type="timeout",
                error_msg="exceeded %d ms" % timeout_ms)
    else:
        respond(out_fd, started, "exception", error_type="HarnessError",
                error_msg="candidate process ended without answering")


if __name__ == "__main__":
    main()
    _real_exit(0)
