/*
 * Copyright 2026 emotag contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace emotag {

/// Error with a stable machine-readable kind string. The CLI maps these to
/// its one-line `error: <kind>: <message>` output. Kinds used across the
/// codebase: parse, vocabulary, integrity, decode, too-short, corrupt-cache,
/// cache-miss, empty-split, config, shape, calibration, train, io, metric.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

namespace detail {
inline void concat_into(std::ostringstream&) {}
template <typename T, typename... Rest>
void concat_into(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  concat_into(os, rest...);
}
}  // namespace detail

template <typename... Args>
std::string strcat(const Args&... args) {
  std::ostringstream os;
  detail::concat_into(os, args...);
  return os.str();
}

template <typename... Args>
[[noreturn]] void fail(const std::string& kind, const Args&... args) {
  throw Error(kind, strcat(args...));
}

}  // namespace emotag
