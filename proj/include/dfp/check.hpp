#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dfp {

namespace detail {

inline void msg_append(std::ostringstream&) {}

template <typename Head, typename... Tail>
void msg_append(std::ostringstream& os, const Head& head, const Tail&... tail) {
    os << head;
    msg_append(os, tail...);
}

template <typename... Args>
std::string msg(const Args&... args) {
    std::ostringstream os;
    msg_append(os, args...);
    return os.str();
}

}  // namespace detail

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

template <typename... Args>
[[noreturn]] void fail(const Args&... args) {
    throw Error(detail::msg(args...));
}

inline std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

}  // namespace dfp

#define DFP_CHECK(cond, ...)                                        \
    do {                                                            \
        if (!(cond)) ::dfp::fail("check failed (" #cond "): ", __VA_ARGS__); \
    } while (0)
