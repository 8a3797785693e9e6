#include "ml/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "ml/linear.hpp"
#include "ml/svd.hpp"

namespace ml {

namespace {

std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> x) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < centroids.rows(); ++k) {
        const double d = sq_dist(centroids.row(k), x);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

// First centroid drawn at random, the rest by farthest-point coverage.
Matrix seed_centroids(const Matrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    std::vector<std::size_t> chosen{rng.index(n)};
    Vector min_d(n, std::numeric_limits<double>::infinity());
    while (chosen.size() < k) {
        for (std::size_t i = 0; i < n; ++i) {
            min_d[i] = std::min(min_d[i], sq_dist(points.row(i), points.row(chosen.back())));
        }
        std::size_t far = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (min_d[i] > min_d[far]) far = i;
        }
        chosen.push_back(far);
    }
    Matrix c(k, points.cols());
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t d = 0; d < points.cols(); ++d) c(j, d) = points(chosen[j], d);
    }
    return c;
}

}  // namespace

std::size_t KMeansModel::assign(std::span<const double> x) const {
    return nearest_centroid(centroids, x);
}

KMeansModel kmeans_fit(const Matrix& points, std::size_t k, std::size_t n_init,
                       std::size_t max_iter, Rng& rng) {
    const std::size_t n = points.rows();
    if (k < 1 || k > n) throw std::invalid_argument("kmeans_fit: need 1 <= k <= n");
    if (n_init < 1) throw std::invalid_argument("kmeans_fit: n_init must be >= 1");

    KMeansModel best;
    best.inertia = std::numeric_limits<double>::infinity();

    for (std::size_t run = 0; run < n_init; ++run) {
        Matrix centroids = seed_centroids(points, k, rng);
        std::vector<std::size_t> assignment(n, k);  // k = unassigned
        Vector trace;
        std::size_t iters = 0;

        for (; iters < max_iter; ++iters) {
            bool changed = false;
            std::vector<std::size_t> counts(k, 0);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t a = nearest_centroid(centroids, points.row(i));
                if (a != assignment[i]) changed = true;
                assignment[i] = a;
                counts[a]++;
            }
            if (!changed && iters > 0) break;

            Matrix sums(k, points.cols());
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t d = 0; d < points.cols(); ++d) {
                    sums(assignment[i], d) += points(i, d);
                }
            }
            for (std::size_t j = 0; j < k; ++j) {
                if (counts[j] == 0) continue;
                for (std::size_t d = 0; d < points.cols(); ++d) {
                    centroids(j, d) = sums(j, d) / static_cast<double>(counts[j]);
                }
            }
            // Reseed any empty cluster to the point farthest from its centroid.
            for (std::size_t j = 0; j < k; ++j) {
                if (counts[j] > 0) continue;
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = sq_dist(points.row(i), centroids.row(assignment[i]));
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                for (std::size_t d = 0; d < points.cols(); ++d) centroids(j, d) = points(far, d);
            }

            double inertia = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                inertia += sq_dist(points.row(i), centroids.row(nearest_centroid(centroids,
                                                                                 points.row(i))));
            }
            trace.push_back(inertia);
        }

        const double inertia = trace.empty() ? 0.0 : trace.back();
        if (inertia < best.inertia) {
            best.centroids = std::move(centroids);
            best.inertia = inertia;
            best.iterations = iters;
            best.inertia_trace = std::move(trace);
        }
    }
    return best;
}

std::vector<int> kmeans_labels(const KMeansModel& m, const Matrix& points) {
    std::vector<int> labels(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) {
        labels[i] = static_cast<int>(m.assign(points.row(i)));
    }
    return labels;
}

void kmeans_online_update(Matrix& centroids, std::span<const double> x, double alpha) {
    if (alpha <= 0.0 || alpha > 1.0) {
        throw std::invalid_argument("kmeans_online_update: alpha must be in (0, 1]");
    }
    const std::size_t k = nearest_centroid(centroids, x);
    for (std::size_t d = 0; d < centroids.cols(); ++d) {
        centroids(k, d) += alpha * (x[d] - centroids(k, d));
    }
}

Dendrogram hierarchical_fit(const Matrix& points, Linkage linkage) {
    const std::size_t n = points.rows();
    if (n < 2) throw std::invalid_argument("hierarchical_fit: need at least 2 points");

    // Active-cluster distance matrix updated by the Lance-Williams rules.
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    std::vector<std::size_t> sizes(n, 1);
    Matrix d = pairwise_sq_dist(points);
    for (auto& v : d.data()) v = std::sqrt(v);
    std::vector<bool> active(n, true);

    Dendrogram out;
    out.n_points = n;
    std::vector<std::size_t> slot_of(n);
    std::iota(slot_of.begin(), slot_of.end(), 0);

    for (std::size_t step = 0; step < n - 1; ++step) {
        std::size_t bi = 0, bj = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!active[j]) continue;
                if (d(i, j) < best) {
                    best = d(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        DendrogramMerge merge;
        merge.a = ids[bi];
        merge.b = ids[bj];
        merge.distance = best;
        merge.size = sizes[bi] + sizes[bj];
        out.merges.push_back(merge);

        for (std::size_t m = 0; m < n; ++m) {
            if (!active[m] || m == bi || m == bj) continue;
            double nd = 0.0;
            switch (linkage) {
                case Linkage::single:
                    nd = std::min(d(bi, m), d(bj, m));
                    break;
                case Linkage::complete:
                    nd = std::max(d(bi, m), d(bj, m));
                    break;
                case Linkage::average:
                    nd = (static_cast<double>(sizes[bi]) * d(bi, m) +
                          static_cast<double>(sizes[bj]) * d(bj, m)) /
                         static_cast<double>(sizes[bi] + sizes[bj]);
                    break;
            }
            d(bi, m) = nd;
            d(m, bi) = nd;
        }
        ids[bi] = n + step;
        sizes[bi] += sizes[bj];
        active[bj] = false;
    }
    return out;
}

namespace {

std::vector<int> labels_from_merge_count(const Dendrogram& d, std::size_t n_merges) {
    const std::size_t n = d.n_points;
    std::vector<std::size_t> parent(n + n_merges);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (std::size_t s = 0; s < n_merges; ++s) {
        const std::size_t root = n + s;
        parent[find(d.merges[s].a)] = root;
        parent[find(d.merges[s].b)] = root;
    }
    std::vector<int> labels(n, -1);
    std::vector<std::size_t> roots;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        std::size_t idx = roots.size();
        for (std::size_t q = 0; q < roots.size(); ++q) {
            if (roots[q] == r) idx = q;
        }
        if (idx == roots.size()) roots.push_back(r);
        labels[i] = static_cast<int>(idx);
    }
    return labels;
}

}  // namespace

std::vector<int> cut_k(const Dendrogram& d, std::size_t k) {
    if (k < 1 || k > d.n_points) throw std::invalid_argument("cut_k: bad cluster count");
    return labels_from_merge_count(d, d.n_points - k);
}

std::vector<int> cut_height(const Dendrogram& d, double height) {
    std::size_t count = 0;
    while (count < d.merges.size() && d.merges[count].distance <= height) ++count;
    return labels_from_merge_count(d, count);
}

DbscanLabels dbscan_fit(const Matrix& points, double eps, std::size_t min_samples) {
    if (eps <= 0.0 || min_samples < 1) throw std::invalid_argument("dbscan_fit: bad parameters");
    const std::size_t n = points.rows();
    const double eps_sq = eps * eps;
    const Matrix d = pairwise_sq_dist(points);

    std::vector<std::vector<std::size_t>> neighbors(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (d(i, j) <= eps_sq) neighbors[i].push_back(j);  // includes self
        }
    }

    DbscanLabels out;
    out.labels.assign(n, DbscanLabels::kNoise);
    out.roles.assign(n, DbscanRole::noise);
    std::vector<bool> is_core(n, false);
    for (std::size_t i = 0; i < n; ++i) is_core[i] = neighbors[i].size() >= min_samples;

    int cluster = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_core[i] || out.labels[i] != DbscanLabels::kNoise) continue;
        // Breadth-first expansion through core points.
        std::vector<std::size_t> queue{i};
        out.labels[i] = cluster;
        out.roles[i] = DbscanRole::core;
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            const std::size_t p = queue[qi];
            if (!is_core[p]) continue;
            for (std::size_t q : neighbors[p]) {
                if (out.labels[q] == DbscanLabels::kNoise) {
                    out.labels[q] = cluster;
                    out.roles[q] = is_core[q] ? DbscanRole::core : DbscanRole::border;
                    queue.push_back(q);
                }
            }
        }
        ++cluster;
    }
    out.n_clusters = static_cast<std::size_t>(cluster);
    return out;
}

double gaussian_pdf(double x, double mu, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("gaussian_pdf: sigma must be > 0");
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double mvn_log_pdf(std::span<const double> x, std::span<const double> mean, const Matrix& cov) {
    const std::size_t dim = x.size();
    if (mean.size() != dim || cov.rows() != dim || cov.cols() != dim) {
        throw std::invalid_argument("mvn_log_pdf: shape mismatch");
    }
    const Matrix l = cholesky(cov);  // throws when not SPD
    // Solve L z = (x - mean); the quadratic form is ||z||^2.
    Vector z(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        double s = x[i] - mean[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * z[k];
        z[i] = s / l(i, i);
    }
    double log_det = 0.0;
    for (std::size_t i = 0; i < dim; ++i) log_det += std::log(l(i, i));
    log_det *= 2.0;
    return -0.5 * (static_cast<double>(dim) * std::log(2.0 * std::numbers::pi) + log_det +
                   dot(z, z));
}

double mvn_pdf(std::span<const double> x, std::span<const double> mean, const Matrix& cov) {
    return std::exp(mvn_log_pdf(x, mean, cov));
}

Vector GmmModel::predict_proba(std::span<const double> x) const {
    const std::size_t k = weights.size();
    Vector log_r(k);
    double max_v = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
        log_r[j] = std::log(weights[j]) + mvn_log_pdf(x, means.row(j), covariances[j]);
        max_v = std::max(max_v, log_r[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(log_r[j] - max_v);
    const double log_norm = max_v + std::log(sum);
    Vector r(k);
    for (std::size_t j = 0; j < k; ++j) r[j] = std::exp(log_r[j] - log_norm);
    return r;
}

std::size_t GmmModel::predict(std::span<const double> x) const {
    const Vector r = predict_proba(x);
    return static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
}

double GmmModel::max_component_density(std::span<const double> x) const {
    double best = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        best = std::max(best, std::exp(mvn_log_pdf(x, means.row(j), covariances[j])));
    }
    return best;
}

GmmModel gmm_fit(const Matrix& points, std::size_t k, std::size_t max_iter, double tol,
                 double reg, Rng& rng) {
    const std::size_t n = points.rows(), dim = points.cols();
    if (k < 1 || k > n) throw std::invalid_argument("gmm_fit: need 1 <= k <= n");
    if (reg <= 0.0) throw std::invalid_argument("gmm_fit: reg must be > 0");

    GmmModel m;
    m.weights.assign(k, 1.0 / static_cast<double>(k));
    m.means = seed_centroids(points, k, rng);

    Vector grand_mean(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < dim; ++d) grand_mean[d] += points(i, d);
    }
    for (double& v : grand_mean) v /= static_cast<double>(n);
    Matrix base_cov(dim, dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < dim; ++a) {
            for (std::size_t b = 0; b < dim; ++b) {
                base_cov(a, b) += (points(i, a) - grand_mean[a]) * (points(i, b) - grand_mean[b]);
            }
        }
    }
    for (auto& v : base_cov.data()) v /= static_cast<double>(n);
    for (std::size_t d = 0; d < dim; ++d) base_cov(d, d) += reg;
    m.covariances.assign(k, base_cov);

    Matrix resp(n, k);
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // E step; per-point work is independent, reduced in index order below.
        Vector point_ll(n, 0.0);
        const std::ptrdiff_t np = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (np > 256)
        for (std::ptrdiff_t ip = 0; ip < np; ++ip) {
            const auto i = static_cast<std::size_t>(ip);
            Vector log_r(k);
            double max_v = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < k; ++j) {
                log_r[j] = std::log(m.weights[j]) +
                           mvn_log_pdf(points.row(i), m.means.row(j), m.covariances[j]);
                max_v = std::max(max_v, log_r[j]);
            }
            double sum = 0.0;
            for (std::size_t j = 0; j < k; ++j) sum += std::exp(log_r[j] - max_v);
            const double log_norm = max_v + std::log(sum);
            for (std::size_t j = 0; j < k; ++j) resp(i, j) = std::exp(log_r[j] - log_norm);
            point_ll[i] = log_norm;
        }
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) ll += point_ll[i];
        m.log_likelihood_trace.push_back(ll);
        if (iter > 0 && ll - prev_ll < tol) {
            m.converged = true;
            break;
        }
        prev_ll = ll;

        // M step.
        for (std::size_t j = 0; j < k; ++j) {
            double nj = 0.0;
            for (std::size_t i = 0; i < n; ++i) nj += resp(i, j);
            if (nj < 1e-10) {
                throw std::runtime_error("gmm_fit: component " + std::to_string(j) +
                                         " degenerated to zero weight");
            }
            m.weights[j] = nj / static_cast<double>(n);
            for (std::size_t d = 0; d < dim; ++d) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += resp(i, j) * points(i, d);
                m.means(j, d) = s / nj;
            }
            Matrix cov(dim, dim);
            for (std::size_t i = 0; i < n; ++i) {
                const double w = resp(i, j);
                for (std::size_t a = 0; a < dim; ++a) {
                    const double da = points(i, a) - m.means(j, a);
                    for (std::size_t b = 0; b < dim; ++b) {
                        cov(a, b) += w * da * (points(i, b) - m.means(j, b));
                    }
                }
            }
            for (auto& v : cov.data()) v /= nj;
            for (std::size_t d = 0; d < dim; ++d) cov(d, d) += reg;
            m.covariances[j] = cov;
        }
    }
    return m;
}

std::vector<bool> gmm_outlier_flag(const GmmModel& m, const Matrix& points, double quantile) {
    if (quantile < 0.0 || quantile > 1.0) {
        throw std::invalid_argument("gmm_outlier_flag: quantile must be in [0, 1]");
    }
    const std::size_t n = points.rows();
    Vector dens(n);
    for (std::size_t i = 0; i < n; ++i) dens[i] = m.max_component_density(points.row(i));
    Vector sorted = dens;
    std::sort(sorted.begin(), sorted.end());
    const auto idx = static_cast<std::size_t>(quantile * static_cast<double>(n - 1));
    const double cut = sorted[idx];
    std::vector<bool> flags(n);
    for (std::size_t i = 0; i < n; ++i) flags[i] = dens[i] < cut;
    return flags;
}

Matrix KernelPcaModel::transform(const Matrix& points) const {
    const std::size_t n = train_points.rows();
    const Matrix k_cross = kernel_matrix(kernel, points, train_points);
    Matrix out(points.rows(), alphas.cols());
    for (std::size_t i = 0; i < points.rows(); ++i) {
        double mean_k = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean_k += k_cross(i, j);
        mean_k /= static_cast<double>(n);
        for (std::size_t c = 0; c < alphas.cols(); ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double centered = k_cross(i, j) - row_means[j] - mean_k + total_mean;
                s += centered * alphas(j, c);
            }
            out(i, c) = s;
        }
    }
    return out;
}

Matrix KernelPcaModel::training_projection() const { return transform(train_points); }

KernelPcaModel kernel_pca_fit(const Matrix& points, const Kernel& kernel,
                              std::size_t n_components) {
    const std::size_t n = points.rows();
    if (n_components < 1 || n_components > n) {
        throw std::invalid_argument("kernel_pca_fit: bad component count");
    }
    const Matrix k = kernel_matrix(kernel, points);

    KernelPcaModel m;
    m.kernel = kernel;
    m.train_points = points;
    m.row_means.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) m.row_means[i] += k(i, j);
        m.row_means[i] /= static_cast<double>(n);
    }
    m.total_mean = 0.0;
    for (double v : m.row_means) m.total_mean += v;
    m.total_mean /= static_cast<double>(n);

    Matrix centered(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            centered(i, j) = k(i, j) - m.row_means[i] - m.row_means[j] + m.total_mean;
        }
    }
    const EigResult eig = eig_sym(centered);

    m.alphas = Matrix(n, n_components);
    m.eigenvalues.assign(n_components, 0.0);
    for (std::size_t c = 0; c < n_components; ++c) {
        const double lambda = std::max(eig.values[c], 0.0);  // clip tiny negatives
        m.eigenvalues[c] = lambda;
        if (lambda <= 1e-12) continue;  // component stays zero
        // Deterministic sign: the largest-magnitude entry is positive.
        std::size_t arg = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (std::fabs(eig.vectors(i, c)) > std::fabs(eig.vectors(arg, c))) arg = i;
        }
        const double sign = eig.vectors(arg, c) >= 0.0 ? 1.0 : -1.0;
        const double scale = sign / std::sqrt(lambda);
        for (std::size_t i = 0; i < n; ++i) m.alphas(i, c) = eig.vectors(i, c) * scale;
    }
    return m;
}

Vector RbfnModel::hidden_activations(std::span<const double> x) const {
    Vector v(centers.rows());
    for (std::size_t k = 0; k < centers.rows(); ++k) {
        v[k] = std::exp(-sq_dist(x, centers.row(k)) / (widths[k] * widths[k]));
    }
    return v;
}

Vector RbfnModel::predict_raw(std::span<const double> x) const {
    const Vector v = hidden_activations(x);
    Vector out(w_out.cols());
    for (std::size_t j = 0; j < w_out.cols(); ++j) {
        double s = bias_out[j];
        for (std::size_t k = 0; k < v.size(); ++k) s += w_out(k, j) * v[k];
        out[j] = sigmoid(s);
    }
    return out;
}

std::size_t RbfnModel::predict_class(std::span<const double> x) const {
    const Vector out = predict_raw(x);
    if (out.size() == 1) return out[0] >= 0.5 ? 1 : 0;
    return static_cast<std::size_t>(std::max_element(out.begin(), out.end()) - out.begin());
}

RbfnModel rbfn_fit(const Matrix& x, const Matrix& targets, const RbfnConfig& config) {
    const std::size_t n = x.rows();
    if (targets.rows() != n) throw std::invalid_argument("rbfn_fit: shape mismatch");
    if (config.centers > n) throw std::invalid_argument("rbfn_fit: more centers than points");
    if (config.width_neighbors < 1 || config.width_neighbors >= config.centers) {
        throw std::invalid_argument("rbfn_fit: need 1 <= P <= L-1");
    }
    Rng rng(config.seed);

    RbfnModel m;
    // Phase 1: the data-clustering phase. Output-layer training is frozen, so
    // hidden activations are never evaluated here.
    m.centers = seed_centroids(x, config.centers, rng);
    for (std::size_t t = 0; t < config.kmeans_iters; ++t) {
        const double alpha = 0.5 / (1.0 + static_cast<double>(t) / static_cast<double>(n));
        kmeans_online_update(m.centers, x.row(t % n), alpha);
    }

    // Widths: RMS distance to the P nearest other centers; zero widths from
    // duplicate centers are floored.
    const std::size_t L = config.centers;
    m.widths.assign(L, 0.0);
    for (std::size_t k = 0; k < L; ++k) {
        Vector dists;
        for (std::size_t j = 0; j < L; ++j) {
            if (j != k) dists.push_back(sq_dist(m.centers.row(k), m.centers.row(j)));
        }
        std::sort(dists.begin(), dists.end());
        double s = 0.0;
        for (std::size_t p = 0; p < config.width_neighbors; ++p) s += dists[p];
        m.widths[k] = std::sqrt(s / static_cast<double>(config.width_neighbors));
        if (m.widths[k] < 1e-6) {
            m.widths[k] = 1e-6;
            ++m.floored_widths;
        }
    }

    // Phase 2: centers fixed, sigmoid output layer trained by backprop.
    const std::size_t outputs = targets.cols();
    m.w_out = Matrix(L, outputs);
    m.bias_out.assign(outputs, 0.0);
    Matrix hidden(n, L);
    for (std::size_t i = 0; i < n; ++i) {
        const Vector v = m.hidden_activations(x.row(i));
        for (std::size_t k = 0; k < L; ++k) hidden(i, k) = v[k];
    }
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < outputs; ++j) {
                double z = m.bias_out[j];
                for (std::size_t k = 0; k < L; ++k) z += m.w_out(k, j) * hidden(i, k);
                const double out = sigmoid(z);
                const double delta = out * (1.0 - out) * (targets(i, j) - out);
                for (std::size_t k = 0; k < L; ++k) {
                    m.w_out(k, j) += config.lr * hidden(i, k) * delta;
                }
                m.bias_out[j] += config.lr * delta;
            }
        }
    }
    return m;
}

}  // namespace ml
