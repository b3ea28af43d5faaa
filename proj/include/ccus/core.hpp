#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ccus {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Failure categories. The CLI maps them onto exit codes.
enum class ErrorKind { config, data, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_config(const std::string& what) {
  throw Error(ErrorKind::config, what);
}
[[noreturn]] inline void fail_data(const std::string& what) {
  throw Error(ErrorKind::data, what);
}
[[noreturn]] inline void fail_numerical(const std::string& what) {
  throw Error(ErrorKind::numerical, what);
}

/// A permutation of {0..n-1}, stored as the image of each index.
using Permutation = std::vector<int>;

Permutation identity_permutation(int n);
bool is_permutation(const Permutation& p, int n);
Permutation inverse(const Permutation& p);

/// All permutations of {0..n-1} in lexicographic order (identity first).
std::vector<Permutation> all_permutations(int n);

}  // namespace ccus
