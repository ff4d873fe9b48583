// Copyright (c) 2026 The sattr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SATTR_ERROR_H_
#define SATTR_ERROR_H_

#include <sstream>
#include <stdexcept>
#include <string>

namespace sattr {

// All recoverable failures in the toolkit surface as this exception. The
// message is a single line so the CLI can print it verbatim.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file; message is prefixed with "path:line: ".
class ParseError : public Error {
 public:
  ParseError(const std::string& path, int line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

void Warn(const std::string& message);

}  // namespace sattr

#define SATTR_THROW(msg)                   \
  do {                                     \
    std::ostringstream sattr_os_;          \
    sattr_os_ << msg;                      \
    throw ::sattr::Error(sattr_os_.str()); \
  } while (0)

#define SATTR_CHECK(cond, msg)                       \
  do {                                               \
    if (!(cond)) SATTR_THROW(msg);                   \
  } while (0)

#endif  // SATTR_ERROR_H_
