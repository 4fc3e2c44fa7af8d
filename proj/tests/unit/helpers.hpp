#pragma once

#include <memory>
#include <string>

#include <doctest.h>

#include "anneal/schedule.hpp"

namespace testing {

inline std::shared_ptr<const anneal::Schedule> schedule(const char* name) {
    return std::make_shared<const anneal::Schedule>(anneal::builtin_schedule(name));
}

// Runs f and returns the what() of the exception it throws, or "" if none.
template <class F>
std::string message_of(F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

inline bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

} // namespace testing
