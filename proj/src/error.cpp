// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#include <sgrt/error.h>

#include <atomic>
#include <iostream>
#include <mutex>

namespace sgrt {

namespace {
std::atomic<bool> g_warnings{true};
std::mutex g_warn_mutex;
}  // namespace

void set_warnings_enabled(bool enabled) { g_warnings = enabled; }

void warn(const std::string &message) {
    if (!g_warnings) return;
    std::lock_guard lock(g_warn_mutex);
    std::cerr << "warning: " << message << "\n";
}

}  // namespace sgrt
