#pragma once

#include <stdexcept>
#include <string>

namespace pam {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text (wrong field count, bad token, bad file banner).
class ParseError : public Error {
public:
    using Error::Error;
};

// A name was not found in a fixed vocabulary.
class LookupError : public Error {
public:
    using Error::Error;
};

// Invalid prime mapping: composite entry, duplicate, wrong length, or a
// relation id with no assigned prime.
class MappingError : public Error {
public:
    using Error::Error;
};

// Value outside an operation's mathematical domain (e.g. factorizing 0).
class DomainError : public Error {
public:
    using Error::Error;
};

// Out-of-range or otherwise invalid argument (hop, node id, k = 0, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Operation invoked on an object in the wrong state (e.g. an empty index).
class StateError : public Error {
public:
    using Error::Error;
};

// Memory exhaustion; the message names how far the computation got.
class ResourceError : public Error {
public:
    using Error::Error;
};

// Cross-file contradiction in a multi-file input.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

// Missing or unreadable file.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace pam
