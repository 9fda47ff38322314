#include "flowgen/builtins.h"

#include <cstdlib>
#include <fstream>
#include <mutex>

#include "flowgen/errors.h"

namespace flowgen {

namespace {

const char* const kFrozenVersion = "py310-v1";

const char* const kFrozenNames[] = {
    "ArithmeticError", "AssertionError", "AttributeError", "BaseException",
    "BlockingIOError", "BrokenPipeError", "BufferError", "BytesWarning",
    "ChildProcessError", "ConnectionAbortedError", "ConnectionError",
    "ConnectionRefusedError", "ConnectionResetError", "DeprecationWarning",
    "EOFError", "Ellipsis", "EncodingWarning", "EnvironmentError", "Exception",
    "FileExistsError", "FileNotFoundError", "FloatingPointError",
    "FutureWarning", "GeneratorExit", "IOError", "ImportError", "ImportWarning",
    "IndentationError", "IndexError", "InterruptedError", "IsADirectoryError",
    "KeyError", "KeyboardInterrupt", "LookupError", "MemoryError",
    "ModuleNotFoundError", "NameError", "NotADirectoryError", "NotImplemented",
    "NotImplementedError", "OSError", "OverflowError",
    "PendingDeprecationWarning", "PermissionError", "ProcessLookupError",
    "RecursionError", "ReferenceError", "ResourceWarning", "RuntimeError",
    "RuntimeWarning", "StopAsyncIteration", "StopIteration", "SyntaxError",
    "SyntaxWarning", "SystemError", "SystemExit", "TabError", "TimeoutError",
    "TypeError", "UnboundLocalError", "UnicodeDecodeError",
    "UnicodeEncodeError", "UnicodeError", "UnicodeTranslateError",
    "UnicodeWarning", "UserWarning", "ValueError", "Warning",
    "ZeroDivisionError", "__import__", "abs", "aiter", "all", "anext", "any",
    "ascii", "bin", "bool", "breakpoint", "bytearray", "bytes", "callable",
    "chr", "classmethod", "compile", "complex", "copyright", "credits",
    "delattr", "dict", "dir", "divmod", "enumerate", "eval", "exec", "exit",
    "filter", "float", "format", "frozenset", "getattr", "globals", "hasattr",
    "hash", "help", "hex", "id", "input", "int", "isinstance", "issubclass",
    "iter", "len", "license", "list", "locals", "map", "max", "memoryview",
    "min", "next", "object", "oct", "open", "ord", "pow", "print", "property",
    "quit", "range", "repr", "reversed", "round", "set", "setattr", "slice",
    "sorted", "staticmethod", "str", "sum", "super", "tuple", "type", "vars",
    "zip",
};

const char* const kKeywords[] = {
    "False",  "None",   "True",  "and",    "as",     "assert", "async",
    "await",  "break",  "class", "continue", "def",  "del",    "elif",
    "else",   "except", "finally", "for",  "from",   "global", "if",
    "import", "in",     "is",    "lambda", "nonlocal", "not",  "or",
    "pass",   "raise",  "return", "try",   "while",  "with",   "yield",
};

struct ActiveState {
    std::mutex mutex;
    std::string path;       // set by CLI flag
    bool loaded = false;
    BuiltinList list;
};

ActiveState& active_state() {
    static ActiveState state;
    return state;
}

}  // namespace

const BuiltinList& BuiltinList::frozen() {
    static const BuiltinList instance = [] {
        BuiltinList list;
        list.version_ = kFrozenVersion;
        for (const char* name : kFrozenNames) list.names_.insert(name);
        return list;
    }();
    return instance;
}

BuiltinList BuiltinList::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open builtin list file: " + path);
    BuiltinList list;
    list.version_ = "custom";
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t begin = line.find_first_not_of(" \t");
        if (begin == std::string::npos) continue;
        size_t end = line.find_last_not_of(" \t");
        std::string token = line.substr(begin, end - begin + 1);
        if (token[0] == '#') {
            const std::string tag = "# version:";
            if (line.rfind(tag, 0) == 0) {
                std::string v = line.substr(tag.size());
                size_t vb = v.find_first_not_of(" \t");
                if (vb != std::string::npos) list.version_ = v.substr(vb);
            }
            continue;
        }
        list.names_.insert(token);
    }
    if (list.names_.empty())
        throw ConfigError("builtin list file contains no names: " + path);
    return list;
}

const BuiltinList& BuiltinList::active() {
    ActiveState& state = active_state();
    std::lock_guard<std::mutex> lock(state.mutex);
    if (!state.loaded) {
        std::string path = state.path;
        if (path.empty()) {
            if (const char* env = std::getenv("FLOWGEN_BUILTINS")) path = env;
        }
        state.list = path.empty() ? frozen() : load_file(path);
        state.loaded = true;
    }
    return state.list;
}

void BuiltinList::set_active_path(const std::string& path) {
    ActiveState& state = active_state();
    std::lock_guard<std::mutex> lock(state.mutex);
    state.path = path;
    state.loaded = false;
}

bool is_python_keyword(std::string_view name) {
    static const std::unordered_set<std::string_view> set = [] {
        std::unordered_set<std::string_view> s;
        for (const char* kw : kKeywords) s.insert(kw);
        return s;
    }();
    return set.find(name) != set.end();
}

}  // namespace flowgen
