#pragma once

#include <stdexcept>
#include <string>

namespace flowdiff {

/// Error raised by any library module. `module()` names the stage that failed
/// so the CLI can print a one-line "module: message" diagnostic.
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& message);

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

[[noreturn]] void fail(const std::string& module, const std::string& message);

}  // namespace flowdiff
