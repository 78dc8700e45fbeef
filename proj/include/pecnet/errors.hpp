#pragma once

#include <stdexcept>
#include <string>

namespace pecnet {

// Base class for every error raised by the library. The category is the
// short machine-readable tag the CLI prints as `error:<category>:`.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

#define PECNET_DEFINE_ERROR(Name, tag)                                   \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(tag, what) {}         \
  };

PECNET_DEFINE_ERROR(ShapeError, "shape")
PECNET_DEFINE_ERROR(StateError, "state")
PECNET_DEFINE_ERROR(IndexError, "index")
PECNET_DEFINE_ERROR(ConfigError, "config")
PECNET_DEFINE_ERROR(DataError, "data")
PECNET_DEFINE_ERROR(FormatError, "format")
PECNET_DEFINE_ERROR(ParseError, "parse")
PECNET_DEFINE_ERROR(SplitError, "split")
PECNET_DEFINE_ERROR(RankError, "rank")
PECNET_DEFINE_ERROR(UsageError, "usage")
PECNET_DEFINE_ERROR(IoError, "io")

#undef PECNET_DEFINE_ERROR

}  // namespace pecnet
