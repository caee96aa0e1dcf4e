#include "codyad/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <utility>

namespace codyad {
namespace {

std::mutex g_mutex;
std::vector<std::string> g_warnings;
std::atomic<bool> g_echo{true};

}  // namespace

void warn(std::string_view msg) {
    std::lock_guard lock(g_mutex);
    g_warnings.emplace_back(msg);
    if (g_echo) std::clog << "warning: " << msg << '\n';
}

std::vector<std::string> drain_warnings() {
    std::lock_guard lock(g_mutex);
    return std::exchange(g_warnings, {});
}

void set_warning_echo(bool on) { g_echo = on; }

}  // namespace codyad
