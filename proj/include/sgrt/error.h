// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fmt/format.h>

#include <stdexcept>
#include <string>

namespace sgrt {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

template <typename... Args>
[[noreturn]] void fail(fmt::format_string<Args...> f, Args &&...args) {
    throw Error(fmt::format(f, std::forward<Args>(args)...));
}

// Warnings go to stderr; tests may silence them.
void set_warnings_enabled(bool enabled);
void warn(const std::string &message);

}  // namespace sgrt
