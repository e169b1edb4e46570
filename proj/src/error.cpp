#include "nvmag/error.hpp"

#include <iostream>
#include <mutex>
#include <utility>

#include <fmt/format.h>

namespace nvmag {

ParseError::ParseError(const std::string& what, int line, int column)
    : Error(fmt::format("{}:{}: {}", line, column, what)), line_(line), column_(column) {}

namespace {

std::mutex g_warning_mutex;

WarningHandler& handler_slot() {
    static WarningHandler handler = [](std::string_view msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return handler;
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
    std::lock_guard lock(g_warning_mutex);
    return std::exchange(handler_slot(), std::move(handler));
}

void warn(std::string_view message) {
    std::lock_guard lock(g_warning_mutex);
    if (handler_slot()) handler_slot()(message);
}

}  // namespace nvmag
