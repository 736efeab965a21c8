#pragma once

#include "nckernel/kernels.hpp"
#include "nckernel/observations.hpp"
#include "oracle/dense_oracle.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace testsupport {

struct Dims {
    int d = 1;
    int v = 0;
    int x = 2;
    int w = 1;
    int z = 1;
};

inline Eigen::MatrixXd normal_block(std::mt19937_64& rng, Eigen::Index n, int cols) {
    std::normal_distribution<double> dist;
    Eigen::MatrixXd out(n, cols);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < cols; ++j) out(i, j) = dist(rng);
    }
    return out;
}

inline Eigen::MatrixXd code_block(std::mt19937_64& rng, Eigen::Index n, int cols, int levels) {
    std::uniform_int_distribution<int> dist(0, levels - 1);
    Eigen::MatrixXd out(n, cols);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < cols; ++j) out(i, j) = dist(rng);
    }
    return out;
}

/// Continuous blocks with a confounded outcome; roughly the shape of the simulation designs.
inline nckernel::Observations random_observations(std::mt19937_64& rng, Eigen::Index n, Dims dims = {}) {
    nckernel::Observations obs;
    obs.d = normal_block(rng, n, dims.d);
    obs.v = normal_block(rng, n, dims.v);
    obs.x = normal_block(rng, n, dims.x);
    obs.w = normal_block(rng, n, dims.w);
    obs.z = normal_block(rng, n, dims.z);
    obs.y = obs.d.col(0).array().square().matrix() + 0.5 * obs.w.col(0) + 0.3 * obs.x.col(0) +
            0.1 * normal_block(rng, n, 1).col(0);
    return obs;
}

inline nckernel::KernelSet median_kernels(const nckernel::Observations& obs) {
    nckernel::KernelSet k;
    k.d = nckernel::median_gaussian_spec(obs.d);
    if (obs.v.cols() > 0) k.v = nckernel::median_gaussian_spec(obs.v);
    k.x = nckernel::median_gaussian_spec(obs.x);
    k.w = nckernel::median_gaussian_spec(obs.w);
    k.z = nckernel::median_gaussian_spec(obs.z);
    return k;
}

inline oracle::Kernels scales(const nckernel::KernelSet& k) {
    return {k.d.lengthscales(), k.v.lengthscales(), k.x.lengthscales(), k.w.lengthscales(), k.z.lengthscales()};
}

inline oracle::Sample sample(const nckernel::Observations& obs) {
    return {obs.y, obs.d, obs.v, obs.x, obs.w, obs.z};
}

/// max_i |a_i - b_i| / max_i |b_i|
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        scale = std::max(scale, std::abs(b[i]));
    }
    return scale > 0.0 ? diff / scale : diff;
}

inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double scale = b.cwiseAbs().maxCoeff();
    const double diff = (a - b).cwiseAbs().maxCoeff();
    return scale > 0.0 ? diff / scale : diff;
}

inline double relative_error(double a, double b) {
    return std::abs(b) > 0.0 ? std::abs(a - b) / std::abs(b) : std::abs(a - b);
}

inline std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace testsupport
