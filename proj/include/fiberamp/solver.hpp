#ifndef FIBERAMP_SOLVER_HPP
#define FIBERAMP_SOLVER_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace fiberamp {

class singular_system : public std::runtime_error {
public:
    explicit singular_system(int layer)
        : std::runtime_error("singular pivot block at layer " + std::to_string(layer)),
          layer_(layer) {}
    int layer() const { return layer_; }

private:
    int layer_;
};

/// Block-tridiagonal system ordered by z-layer. diag[j] couples layer j with
/// itself, upper[j] couples layer j to layer j+1, lower[j] layer j+1 to j.
template <typename Scalar>
struct LayeredMatrix {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    std::vector<Mat> diag;
    std::vector<Mat> lower, upper;  // size n_layers - 1
    std::vector<int> offset;        // global offset of each layer block

    explicit LayeredMatrix(const std::vector<int>& block_sizes) {
        int n = static_cast<int>(block_sizes.size());
        if (n < 1) throw std::invalid_argument("LayeredMatrix: need at least one layer");
        diag.reserve(n);
        offset.resize(n + 1);
        offset[0] = 0;
        for (int j = 0; j < n; ++j) {
            diag.emplace_back(Mat::Zero(block_sizes[j], block_sizes[j]));
            offset[j + 1] = offset[j] + block_sizes[j];
        }
        for (int j = 0; j + 1 < n; ++j) {
            lower.emplace_back(Mat::Zero(block_sizes[j + 1], block_sizes[j]));
            upper.emplace_back(Mat::Zero(block_sizes[j], block_sizes[j + 1]));
        }
    }

    int n_layers() const { return static_cast<int>(diag.size()); }
    int rows() const { return offset.back(); }

    /// Scatter-add: global row r, global col c. Rows/cols must live in the
    /// same or adjacent layers.
    void add(int r, int c, Scalar v) {
        int jr = layer_of(r), jc = layer_of(c);
        int lr = r - offset[jr], lc = c - offset[jc];
        if (jr == jc) diag[jr](lr, lc) += v;
        else if (jc == jr + 1) upper[jr](lr, lc) += v;
        else if (jc == jr - 1) lower[jc](lr, lc) += v;
        else throw std::invalid_argument("LayeredMatrix::add: bandwidth violation");
    }

    int layer_of(int global) const {
        int lo = 0, hi = n_layers() - 1;
        while (lo < hi) {
            int mid = (lo + hi + 1) / 2;
            if (global >= offset[mid]) lo = mid;
            else hi = mid - 1;
        }
        return lo;
    }

    Vec multiply(const Vec& x) const {
        Vec y = Vec::Zero(rows());
        for (int j = 0; j < n_layers(); ++j) {
            auto xj = x.segment(offset[j], diag[j].cols());
            y.segment(offset[j], diag[j].rows()) += diag[j] * xj;
            if (j + 1 < n_layers()) {
                auto xj1 = x.segment(offset[j + 1], diag[j + 1].cols());
                y.segment(offset[j], diag[j].rows()) += upper[j] * xj1;
                y.segment(offset[j + 1], diag[j + 1].rows()) += lower[j] * xj;
            }
        }
        return y;
    }
};

/// Block-Thomas factorization: forward elimination of layer blocks, storing
/// the pivot LU factors and the eliminated coupling blocks.
template <typename Scalar>
class LayeredFactorization {
public:
    using Mat = typename LayeredMatrix<Scalar>::Mat;
    using Vec = typename LayeredMatrix<Scalar>::Vec;

    explicit LayeredFactorization(const LayeredMatrix<Scalar>& A)
        : offset_(A.offset), lower_(A.lower) {
        int n = A.n_layers();
        pivots_.reserve(n);
        Mat D = A.diag[0];
        for (int j = 0; j < n; ++j) {
            pivots_.emplace_back(D);
            // partial-pivoted LU: flag breakdown via the U diagonal
            auto du = pivots_.back().matrixLU().diagonal();
            double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
            for (int i = 0; i < du.size(); ++i) {
                double a = std::abs(du[i]);
                dmax = std::max(dmax, a);
                dmin = std::min(dmin, a);
            }
            if (!(dmax > 0.0) || dmin < 1e-14 * dmax) throw singular_system(j);
            if (j + 1 < n) {
                // X = D_j^{-1} U_j; D_{j+1} <- D_{j+1} - L_j X
                x_.emplace_back(pivots_.back().solve(A.upper[j]));
                D = A.diag[j + 1] - A.lower[j] * x_.back();
            }
        }
    }

    Vec solve(const Vec& rhs) const {
        int n = static_cast<int>(pivots_.size());
        if (rhs.size() != offset_.back())
            throw std::invalid_argument("LayeredFactorization::solve: rhs dimension mismatch");
        std::vector<Vec> y(n);
        Vec b = rhs.segment(offset_[0], offset_[1] - offset_[0]);
        for (int j = 0; j < n; ++j) {
            y[j] = pivots_[j].solve(b);
            if (j + 1 < n)
                b = rhs.segment(offset_[j + 1], offset_[j + 2] - offset_[j + 1]) - lower_[j] * y[j];
        }
        Vec x(offset_.back());
        x.segment(offset_[n - 1], y[n - 1].size()) = y[n - 1];
        for (int j = n - 2; j >= 0; --j) {
            y[j] -= x_[j] * x.segment(offset_[j + 1], offset_[j + 2] - offset_[j + 1]);
            x.segment(offset_[j], y[j].size()) = y[j];
        }
        return x;
    }

    /// One step of iterative refinement against the original matrix.
    Vec solve_refined(const LayeredMatrix<Scalar>& A, const Vec& rhs) const {
        Vec x = solve(rhs);
        Vec r = rhs - A.multiply(x);
        return x + solve(r);
    }

private:
    std::vector<int> offset_;
    std::vector<Mat> lower_;
    std::vector<Eigen::PartialPivLU<Mat>> pivots_;
    std::vector<Mat> x_;  // D_j^{-1} U_j
};

}  // namespace fiberamp

#endif
