#pragma once

#include <stdexcept>
#include <string>

namespace pcts {

// Missing or unreadable external input: files, directories, malformed resources.
class ResourceError : public std::runtime_error {
public:
    explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

// Failure inside a pluggable backend (generator or scorer).
class BackendError : public std::runtime_error {
public:
    explicit BackendError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pcts
