#ifndef WNS_COMMON_HPP
#define WNS_COMMON_HPP

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace wns {

using Point = Eigen::Vector2d;
using Index = std::int64_t;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad polygon, nu <= 0, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A weight was evaluated at its singular point.
class SingularPoint : public Error {
public:
    using Error::Error;
};

/// A point or curve lies outside the computational domain.
class OutsideDomain : public Error {
public:
    using Error::Error;
};

/// A linear or nonlinear solve did not reach its tolerance.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

#define WNS_REQUIRE(cond, Kind, msg)                                                               \
    do {                                                                                           \
        if (!(cond)) throw ::wns::Kind(msg);                                                       \
    } while (0)

inline double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

/// 64-bit FNV-1a over a byte range. Used for mesh and spec checksums.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 14695981039346656037ull);
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 14695981039346656037ull)
{
    return fnv1a(s.data(), s.size(), seed);
}
std::string hex64(std::uint64_t v);

} // namespace wns

#endif
