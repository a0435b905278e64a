#ifndef MESH_ERRORS_HPP
#define MESH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mesh {

// Scenario file / CLI argument problems. Carries a line number when known.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

class EncodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NoRouteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NoForwarderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Internal-consistency violation: simulation state that must never occur.
class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace mesh

#endif
