#pragma once

#include <stdexcept>
#include <string>

namespace svrlab {

enum class Errc {
  ZeroNorm,
  DegeneratePair,
  ZeroUpdate,
  BatchTooSmall,
  WidthMismatch,
  StaleCache,
  ShapeMismatch,
  InvalidSpec,
  InvalidConfig,
  IndexOutOfRange,
  EmptyRelevance,
  Format,
  Io,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace svrlab

// Contract checks on hot paths; compiled out of release builds.
#ifndef NDEBUG
#define SVRLAB_DCHECK(cond, code, msg)                    \
  do {                                                    \
    if (!(cond)) throw ::svrlab::Error((code), (msg));    \
  } while (0)
#else
#define SVRLAB_DCHECK(cond, code, msg) \
  do {                                 \
  } while (0)
#endif
