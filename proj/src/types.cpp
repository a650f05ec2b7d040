#include "mslin/types.hpp"

#include <Eigen/SVD>

namespace mslin {

const char* to_string(TimeKind kind) {
    return kind == TimeKind::discrete ? "discrete" : "continuous";
}

double spectral_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    if (m.cols() == 1) return m.col(0).norm();
    if (m.rows() == 1) return m.row(0).norm();
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

double smallest_singular_value(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    if (m.rows() != m.cols()) return 0.0;
    return s(s.size() - 1);
}

}  // namespace mslin
