#pragma once

#include <cstdint>

#include "ml/kernel.hpp"
#include "ml/matrix.hpp"
#include "ml/rng.hpp"

namespace ml {

struct KMeansModel {
    Matrix centroids;  // k x d
    double inertia = 0.0;
    std::size_t iterations = 0;
    Vector inertia_trace;  // per Lloyd iteration of the winning run

    std::size_t assign(std::span<const double> x) const;
};

/// Lloyd iterations from farthest-point seeding, best of n_init runs by
/// inertia. Empty clusters are reseeded to the point farthest from its
/// assigned centroid.
KMeansModel kmeans_fit(const Matrix& points, std::size_t k, std::size_t n_init,
                       std::size_t max_iter, Rng& rng);

std::vector<int> kmeans_labels(const KMeansModel& m, const Matrix& points);

/// Moves only the centroid nearest to x a fraction alpha toward it; ties go
/// to the lower index.
void kmeans_online_update(Matrix& centroids, std::span<const double> x, double alpha);

enum class Linkage { single, complete, average };

struct DendrogramMerge {
    std::size_t a = 0;       // cluster ids; 0..n-1 are points, n+step are merges
    std::size_t b = 0;
    double distance = 0.0;
    std::size_t size = 0;    // points in the merged cluster
};

struct Dendrogram {
    std::size_t n_points = 0;
    std::vector<DendrogramMerge> merges;  // n-1 entries
};

Dendrogram hierarchical_fit(const Matrix& points, Linkage linkage);

/// Flat labels from the first k clusters (cut_k) or from merging every pair
/// closer than the height (cut_height). Labels are 0-based and compacted.
std::vector<int> cut_k(const Dendrogram& d, std::size_t k);
std::vector<int> cut_height(const Dendrogram& d, double height);

enum class DbscanRole { core, border, noise };

struct DbscanLabels {
    static constexpr int kNoise = -1;
    std::vector<int> labels;  // cluster id or kNoise
    std::vector<DbscanRole> roles;
    std::size_t n_clusters = 0;
};

/// Density expansion; a core point has >= min_samples neighbors within eps,
/// itself included.
DbscanLabels dbscan_fit(const Matrix& points, double eps, std::size_t min_samples);

double gaussian_pdf(double x, double mu, double sigma);
double mvn_log_pdf(std::span<const double> x, std::span<const double> mean, const Matrix& cov);
double mvn_pdf(std::span<const double> x, std::span<const double> mean, const Matrix& cov);

struct GmmModel {
    Vector weights;              // k, sums to 1
    Matrix means;                // k x d
    std::vector<Matrix> covariances;
    Vector log_likelihood_trace;
    bool converged = false;

    /// Responsibilities, rows sum to 1.
    Vector predict_proba(std::span<const double> x) const;
    std::size_t predict(std::span<const double> x) const;
    /// Max component density (not posterior) used for outlier flagging.
    double max_component_density(std::span<const double> x) const;
};

GmmModel gmm_fit(const Matrix& points, std::size_t k, std::size_t max_iter, double tol, double reg,
                 Rng& rng);

/// Flags points whose max component density falls below the given quantile
/// of that statistic over the dataset.
std::vector<bool> gmm_outlier_flag(const GmmModel& m, const Matrix& points, double quantile);

struct KernelPcaModel {
    Kernel kernel;
    Matrix train_points;
    Matrix alphas;        // n x n_components, eigenvector / sqrt(eigenvalue)
    Vector eigenvalues;
    Vector row_means;     // of the training kernel matrix
    double total_mean = 0.0;

    Matrix transform(const Matrix& points) const;
    Matrix training_projection() const;  // n x n_components
};

/// Centered-kernel eigendecomposition; the sign convention makes the largest-
/// magnitude entry of each component positive. Tiny negative eigenvalues are
/// clipped.
KernelPcaModel kernel_pca_fit(const Matrix& points, const Kernel& kernel,
                              std::size_t n_components);

struct RbfnModel {
    Matrix centers;   // L x d
    Vector widths;    // L
    Matrix w_out;     // L x outputs
    Vector bias_out;  // outputs (stored as bias; threshold form is -bias)
    std::size_t floored_widths = 0;  // zero widths from duplicate centers

    Vector hidden_activations(std::span<const double> x) const;
    Vector predict_raw(std::span<const double> x) const;   // sigmoid outputs
    std::size_t predict_class(std::span<const double> x) const;
};

struct RbfnConfig {
    std::size_t centers = 4;         // L
    std::size_t width_neighbors = 1;  // P nearest centers for the widths
    std::size_t kmeans_iters = 2000;  // phase-1 online clustering steps
    double lr = 0.5;
    std::size_t epochs = 2000;
    std::uint64_t seed = 0;
};

/// Two-phase training: online K-means fixes the centers (output layer
/// frozen), widths from the RMS distance to the P nearest centers, then
/// backprop on the sigmoid output layer with centers fixed.
RbfnModel rbfn_fit(const Matrix& x, const Matrix& targets, const RbfnConfig& config);

}  // namespace ml
