#ifndef OPGAME_CSV_HPP
#define OPGAME_CSV_HPP

#include <charconv>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <system_error>

namespace opgame {

// Shortest round-trip decimal form of a double. Used for every numeric
// CSV field so that persisted values parse back bit-identically and
// reruns produce byte-identical files.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc()) {
        throw std::runtime_error("format_double: conversion failed");
    }
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::runtime_error("parse_double: bad number '" + s + "'");
    }
    return v;
}

} // namespace opgame

#endif
