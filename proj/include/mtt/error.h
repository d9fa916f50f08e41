// mtt/error.h
//
// Copyright 2026  The mtt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MTT_ERROR_H_
#define MTT_ERROR_H_

#include <sstream>
#include <stdexcept>
#include <string>

namespace mtt {

enum class ErrorKind {
  kInvalidInput,
  kShape,
  kInvalidLabel,
  kInvalidConfig,
  kConsistency,
  kTooLarge,
  kEmptyInventory,
  kUnknownSpeaker,
  kEmptyInput,
  kDivergence,
  kIo,
};

const char *ErrorKindName(ErrorKind kind);

// All library failures are reported through this exception; `kind()` lets
// callers (and the CLI exit-code mapping) distinguish them.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

namespace internal {

inline void AppendAll(std::ostringstream &) {}

template <typename T, typename... Rest>
void AppendAll(std::ostringstream &os, const T &v, const Rest &...rest) {
  os << v;
  AppendAll(os, rest...);
}

}  // namespace internal

template <typename... Args>
[[noreturn]] void Fail(ErrorKind kind, const Args &...args) {
  std::ostringstream os;
  internal::AppendAll(os, args...);
  throw Error(kind, os.str());
}

}  // namespace mtt

#endif  // MTT_ERROR_H_
