#ifndef GUIDEPAINT_COMMON_HPP_
#define GUIDEPAINT_COMMON_HPP_

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace guidepaint {

// Invalid configuration (bad hyperparameter, violated invariant). CLI maps
// this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shape / dimension mismatch.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// File IO, decode and archive errors.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Runtime training failure (NaN loss, divergence).
class TrainError : public std::runtime_error {
 public:
  explicit TrainError(const std::string& msg) : std::runtime_error(msg) {}
};

inline bool is_power_of_two(int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

namespace detail {
inline void format_into(std::ostringstream&) {}
template <typename T, typename... Rest>
void format_into(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  format_into(os, rest...);
}
}  // namespace detail

template <typename... Args>
std::string strcat_args(const Args&... args) {
  std::ostringstream os;
  detail::format_into(os, args...);
  return os.str();
}

#define GP_CHECK_CFG(cond, ...)                                     \
  do {                                                              \
    if (!(cond))                                                    \
      throw ::guidepaint::ConfigError(                              \
          ::guidepaint::strcat_args("config error: ", __VA_ARGS__)); \
  } while (0)

#define GP_CHECK_SHAPE(cond, ...)                                   \
  do {                                                              \
    if (!(cond))                                                    \
      throw ::guidepaint::ShapeError(                               \
          ::guidepaint::strcat_args("shape error: ", __VA_ARGS__));  \
  } while (0)

}  // namespace guidepaint

#endif  // GUIDEPAINT_COMMON_HPP_
