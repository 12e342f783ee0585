#pragma once

#include <stdexcept>
#include <string>

namespace chirp {

/// Base class for every error raised by the library. `kind()` returns a
/// stable identifier (e.g. "MalformedRiff") that the CLI prints verbatim.
class Error : public std::runtime_error {
 public:
  Error(const char* kind, const std::string& what)
      : std::runtime_error(std::string(kind) + ": " + what), kind_(kind) {}

  const char* kind() const noexcept { return kind_; }

 private:
  const char* kind_;
};

#define CHIRP_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

// audio
CHIRP_DEFINE_ERROR(MalformedRiff);
CHIRP_DEFINE_ERROR(UnsupportedFormat);
CHIRP_DEFINE_ERROR(EmptyClip);

// spectral features
CHIRP_DEFINE_ERROR(NonPowerOfTwoWindow);
CHIRP_DEFINE_ERROR(MismatchedSpectra);
CHIRP_DEFINE_ERROR(BankMismatch);
CHIRP_DEFINE_ERROR(SeriesTooShort);
CHIRP_DEFINE_ERROR(NoFrames);

// dataset
CHIRP_DEFINE_ERROR(EmptyCorpus);
CHIRP_DEFINE_ERROR(UnreadableClip);
CHIRP_DEFINE_ERROR(ClassTooSmall);
CHIRP_DEFINE_ERROR(MalformedCache);

// network
CHIRP_DEFINE_ERROR(InvalidSpec);
CHIRP_DEFINE_ERROR(DimensionMismatch);
CHIRP_DEFINE_ERROR(EmptySet);
CHIRP_DEFINE_ERROR(MalformedModel);

// evaluation
CHIRP_DEFINE_ERROR(LabelOutOfRange);
CHIRP_DEFINE_ERROR(EmptyMatrix);

#undef CHIRP_DEFINE_ERROR

}  // namespace chirp
