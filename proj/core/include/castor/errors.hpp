#pragma once

#include <stdexcept>
#include <string>

namespace castor {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a record file is malformed; the message carries the 1-based
// line number and the offending field.
struct SchemaError : std::runtime_error {
    SchemaError(std::size_t line, const std::string& field, const std::string& detail)
        : std::runtime_error("line " + std::to_string(line) + ": field '" + field +
                             "': " + detail),
          line(line),
          field(field) {}

    std::size_t line;
    std::string field;
};

}  // namespace castor
