#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace nfad {

// Dense row-major doubles throughout. Row-major matters for serialization:
// model files store parameter blocks in memory order.
using Vec = Eigen::VectorXd;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require_finite(const Mat& m, const char* what) {
  if (!m.allFinite())
    throw std::invalid_argument(std::string(what) + ": non-finite values");
}

inline void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite())
    throw std::invalid_argument(std::string(what) + ": non-finite values");
}

}  // namespace nfad
