#pragma once

#include <stdexcept>
#include <string>

namespace topobo {

// Exit-code mapping used by the CLI: input 3, numerical 4, resource 5.
struct input_error : std::runtime_error {
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct resource_error : std::runtime_error {
    explicit resource_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace topobo
