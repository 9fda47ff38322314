#pragma once

#include <string>
#include <string_view>
#include <unordered_set>

namespace flowgen {

// The frozen set of Python built-in names ("Default Functions"). These are
// the only callable names that survive identifier renaming, so Syntax-Flow
// may mention them while Variable-Flow must not.
class BuiltinList {
public:
    // Compiled-in list matching data/python_builtins.txt.
    static const BuiltinList& frozen();

    // Loads a list file: '#' comment lines, one name per line. A comment of
    // the form "# version: <tag>" sets the version string.
    static BuiltinList load_file(const std::string& path);

    // Resolution order: explicit path, then $FLOWGEN_BUILTINS, then frozen().
    static const BuiltinList& active();
    static void set_active_path(const std::string& path);

    bool contains(std::string_view name) const {
        return names_.find(std::string(name)) != names_.end();
    }
    const std::string& version() const { return version_; }
    size_t size() const { return names_.size(); }

private:
    std::string version_;
    std::unordered_set<std::string> names_;
};

// Python reserved keywords (the closed kwlist; soft keywords excluded).
bool is_python_keyword(std::string_view name);

}  // namespace flowgen
