#pragma once

#include <stdexcept>
#include <string>

namespace hhj {

// A dataset, sweep or record description that cannot be satisfied.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid join / cost-model configuration (e.g. fewer than 3 memory frames).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Generation could not proceed (e.g. unique key space exhausted).
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A record whose serialized size exceeds the frame capacity.
class UnsupportedRecord : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed binary input.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Should be unreachable with a sane configuration (e.g. max_rounds hit with
// bail-out disabled).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace hhj
