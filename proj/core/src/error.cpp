#include "flowdiff/error.hpp"

namespace flowdiff {

Error::Error(std::string module, const std::string& message)
    : std::runtime_error(module + ": " + message), module_(std::move(module)) {}

void fail(const std::string& module, const std::string& message) {
    throw Error(module, message);
}

}  // namespace flowdiff
