#include "dsvs/gmr.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

namespace dsvs {
namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

double log_gaussian(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                    const Eigen::LLT<Eigen::MatrixXd>& llt, double log_det) {
    const Eigen::VectorXd d = x - mean;
    const Eigen::VectorXd w = llt.matrixL().solve(d);
    return -0.5 * (x.size() * kLogTwoPi + log_det + w.squaredNorm());
}

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    double log_det = 0.0;
    const auto& L = llt.matrixLLT();
    for (int i = 0; i < L.rows(); ++i) log_det += 2.0 * std::log(L(i, i));
    return log_det;
}

// k-means++ seeding followed by Lloyd iterations; everything is driven by the
// single generator so the result is reproducible.
std::vector<int> kmeans_assignments(const Eigen::MatrixXd& data, int k, std::mt19937_64& rng,
                                    int lloyd_iters) {
    const int m = static_cast<int>(data.cols());
    std::vector<Eigen::VectorXd> centers;
    centers.reserve(k);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    centers.push_back(data.col(static_cast<int>(unit(rng) * m) % m));

    Eigen::VectorXd d2 = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
    while (static_cast<int>(centers.size()) < k) {
        for (int i = 0; i < m; ++i) {
            const double d = (data.col(i) - centers.back()).squaredNorm();
            if (d < d2(i)) d2(i) = d;
        }
        const double total = d2.sum();
        if (total <= 0.0) {
            centers.push_back(data.col(static_cast<int>(centers.size()) % m));
            continue;
        }
        double r = unit(rng) * total;
        int pick = m - 1;
        for (int i = 0; i < m; ++i) {
            r -= d2(i);
            if (r <= 0.0) {
                pick = i;
                break;
            }
        }
        centers.push_back(data.col(pick));
    }

    std::vector<int> assign(m, 0);
    for (int iter = 0; iter < lloyd_iters; ++iter) {
        bool changed = false;
        for (int i = 0; i < m; ++i) {
            int best = 0;
            double best_d = (data.col(i) - centers[0]).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double d = (data.col(i) - centers[c]).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;
        for (int c = 0; c < k; ++c) {
            Eigen::VectorXd sum = Eigen::VectorXd::Zero(data.rows());
            int count = 0;
            for (int i = 0; i < m; ++i) {
                if (assign[i] == c) {
                    sum += data.col(i);
                    ++count;
                }
            }
            if (count > 0) centers[c] = sum / count;
        }
    }
    return assign;
}

struct EmOutcome {
    std::vector<GaussianComponent> components;
    std::vector<double> loglik_history;
    int iterations = 0;
    bool degenerate = false;
};

EmOutcome run_em(const Eigen::MatrixXd& data, int k, std::uint64_t seed,
                 const GmmFitConfig& config, double reg_floor) {
    const int dim = static_cast<int>(data.rows());
    const int m = static_cast<int>(data.cols());
    std::mt19937_64 rng(seed);

    EmOutcome out;
    const auto assign = kmeans_assignments(data, k, rng, config.kmeans_iters);

    out.components.resize(k);
    for (int c = 0; c < k; ++c) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
        int count = 0;
        for (int i = 0; i < m; ++i) {
            if (assign[i] == c) {
                mean += data.col(i);
                ++count;
            }
        }
        if (count == 0) {
            // Empty seed cluster: park the component on a data point.
            mean = data.col(c % m);
            count = 1;
        } else {
            mean /= count;
        }
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
        for (int i = 0; i < m; ++i) {
            if (assign[i] == c) {
                const Eigen::VectorXd d = data.col(i) - mean;
                cov += d * d.transpose();
            }
        }
        cov /= std::max(count, 1);
        cov += reg_floor * Eigen::MatrixXd::Identity(dim, dim);
        out.components[c] = {static_cast<double>(std::max(count, 1)) / m, mean, cov};
    }
    {
        double prior_sum = 0.0;
        for (auto& c : out.components) prior_sum += c.prior;
        for (auto& c : out.components) c.prior /= prior_sum;
    }

    Eigen::MatrixXd log_resp(k, m);
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < config.max_iter; ++iter) {
        // E step
        std::vector<Eigen::LLT<Eigen::MatrixXd>> llts(k);
        std::vector<double> log_dets(k);
        for (int c = 0; c < k; ++c) {
            llts[c].compute(out.components[c].covariance);
            if (llts[c].info() != Eigen::Success) {
                out.degenerate = true;
                return out;
            }
            log_dets[c] = log_det_from_llt(llts[c]);
        }
        double ll = 0.0;
        for (int i = 0; i < m; ++i) {
            double max_log = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                log_resp(c, i) = std::log(out.components[c].prior) +
                                 log_gaussian(data.col(i), out.components[c].mean, llts[c],
                                              log_dets[c]);
                max_log = std::max(max_log, log_resp(c, i));
            }
            double sum = 0.0;
            for (int c = 0; c < k; ++c) sum += std::exp(log_resp(c, i) - max_log);
            const double log_sum = max_log + std::log(sum);
            ll += log_sum;
            for (int c = 0; c < k; ++c) log_resp(c, i) -= log_sum;
        }
        out.loglik_history.push_back(ll);
        out.iterations = iter + 1;

        // M step
        for (int c = 0; c < k; ++c) {
            double w = 0.0;
            Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
            for (int i = 0; i < m; ++i) {
                const double r = std::exp(log_resp(c, i));
                w += r;
                mean += r * data.col(i);
            }
            if (w < 1e-10 * m) {
                out.degenerate = true;
                return out;
            }
            mean /= w;
            Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
            for (int i = 0; i < m; ++i) {
                const double r = std::exp(log_resp(c, i));
                const Eigen::VectorXd d = data.col(i) - mean;
                cov += r * (d * d.transpose());
            }
            cov /= w;
            cov += reg_floor * Eigen::MatrixXd::Identity(dim, dim);
            out.components[c] = {w / m, mean, cov};
        }

        if (iter > 0 && std::abs(ll - prev_ll) < config.tol * std::abs(ll)) break;
        prev_ll = ll;
    }

    // Collapsed below the floor means the component carries no volume.
    for (const auto& c : out.components) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.covariance);
        if (es.eigenvalues().minCoeff() < 0.5 * reg_floor) {
            out.degenerate = true;
            return out;
        }
    }
    return out;
}

}  // namespace

GmrModel::GmrModel(std::vector<GaussianComponent> components, int input_dim, std::uint64_t seed)
    : components_(std::move(components)), input_dim_(input_dim), seed_(seed) {
    if (components_.empty()) throw Error("GmrModel: needs at least one component");
    dim_ = static_cast<int>(components_[0].mean.size());
    finalize();
}

void GmrModel::finalize() {
    const int di = input_dim_;
    const int do_ = dim_ - input_dim_;
    prepared_.clear();
    prepared_.reserve(components_.size());
    for (const auto& c : components_) {
        Prepared p;
        const Eigen::MatrixXd cov_ii = c.covariance.topLeftCorner(di, di);
        const Eigen::MatrixXd cov_oi = c.covariance.bottomLeftCorner(do_, di);
        const Eigen::MatrixXd cov_oo = c.covariance.bottomRightCorner(do_, do_);
        Eigen::LLT<Eigen::MatrixXd> llt(cov_ii);
        if (llt.info() != Eigen::Success)
            throw DegenerateComponent("input covariance block is not positive definite");
        p.input_cov_inv = llt.solve(Eigen::MatrixXd::Identity(di, di));
        p.gain = cov_oi * p.input_cov_inv;
        p.conditional_cov = cov_oo - p.gain * cov_oi.transpose();
        p.log_norm = -0.5 * (di * kLogTwoPi + log_det_from_llt(llt));
        prepared_.push_back(std::move(p));
    }
}

Eigen::VectorXd GmrModel::responsibilities(const Eigen::VectorXd& input) const {
    const int k = this->k();
    Eigen::VectorXd log_h(k);
    for (int c = 0; c < k; ++c) {
        const Eigen::VectorXd d = input - components_[c].mean.head(input_dim_);
        const double quad = d.dot(prepared_[c].input_cov_inv * d);
        log_h(c) = std::log(components_[c].prior) + prepared_[c].log_norm - 0.5 * quad;
    }
    const double max_log = log_h.maxCoeff();
    Eigen::VectorXd h = (log_h.array() - max_log).exp();
    return h / h.sum();
}

GmrModel::Prediction GmrModel::predict(const Eigen::VectorXd& input) const {
    const int do_ = output_dim();
    const Eigen::VectorXd h = responsibilities(input);

    std::vector<Eigen::VectorXd> cond_means(k());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(do_);
    for (int c = 0; c < k(); ++c) {
        const Eigen::VectorXd d = input - components_[c].mean.head(input_dim_);
        cond_means[c] = components_[c].mean.tail(do_) + prepared_[c].gain * d;
        mean += h(c) * cond_means[c];
    }
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(do_, do_);
    for (int c = 0; c < k(); ++c) {
        const Eigen::VectorXd d = cond_means[c] - mean;
        cov += h(c) * (prepared_[c].conditional_cov + d * d.transpose());
    }
    return {mean, cov};
}

nlohmann::json GmrModel::to_json() const {
    nlohmann::json j;
    j["k"] = k();
    j["input_dim"] = input_dim_;
    j["dim"] = dim_;
    j["seed"] = seed_;
    j["priors"] = nlohmann::json::array();
    j["means"] = nlohmann::json::array();
    j["covariances"] = nlohmann::json::array();
    for (const auto& c : components_) {
        j["priors"].push_back(c.prior);
        std::vector<double> mean(c.mean.data(), c.mean.data() + c.mean.size());
        j["means"].push_back(mean);
        std::vector<double> cov;
        cov.reserve(dim_ * dim_);
        for (int r = 0; r < dim_; ++r)
            for (int col = 0; col < dim_; ++col) cov.push_back(c.covariance(r, col));
        j["covariances"].push_back(cov);
    }
    return j;
}

GmrModel GmrModel::from_json(const nlohmann::json& j) {
    const int k = j.at("k").get<int>();
    const int input_dim = j.at("input_dim").get<int>();
    const int dim = j.at("dim").get<int>();
    std::vector<GaussianComponent> components(k);
    for (int c = 0; c < k; ++c) {
        components[c].prior = j.at("priors").at(c).get<double>();
        const auto mean = j.at("means").at(c).get<std::vector<double>>();
        components[c].mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), dim);
        const auto cov = j.at("covariances").at(c).get<std::vector<double>>();
        components[c].covariance.resize(dim, dim);
        for (int r = 0; r < dim; ++r)
            for (int col = 0; col < dim; ++col) components[c].covariance(r, col) = cov[r * dim + col];
    }
    return GmrModel(std::move(components), input_dim, j.value("seed", std::uint64_t{0}));
}

void GmrModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write model file: " + path);
    out << to_json().dump(2) << "\n";
}

GmrModel GmrModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read model file: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

GmmFitResult fit_gmm(const Eigen::MatrixXd& data, int input_dim, int k, std::uint64_t seed,
                     const GmmFitConfig& config) {
    if (k < 1) throw Error("fit_gmm: k must be at least 1");
    if (data.cols() < k) throw Error("fit_gmm: fewer samples than components");
    if (input_dim <= 0 || input_dim >= data.rows()) throw Error("fit_gmm: bad input_dim");

    const auto t0 = std::chrono::steady_clock::now();

    // Floor relative to the overall data spread.
    const Eigen::VectorXd mean = data.rowwise().mean();
    double trace_scale = 0.0;
    for (int i = 0; i < data.cols(); ++i) trace_scale += (data.col(i) - mean).squaredNorm();
    trace_scale /= std::max<int>(1, static_cast<int>(data.cols())) * data.rows();
    const double reg_floor = config.reg * std::max(trace_scale, 1e-12);

    EmOutcome outcome = run_em(data, k, seed, config, reg_floor);
    if (outcome.degenerate) {
        outcome = run_em(data, k, seed + 1, config, reg_floor);
        if (outcome.degenerate)
            throw DegenerateComponent("component collapsed below the regularization floor");
    }

    GmmFitResult result;
    result.model = GmrModel(std::move(outcome.components), input_dim, seed);
    result.loglik_history = std::move(outcome.loglik_history);
    result.iterations = outcome.iterations;
    const auto t1 = std::chrono::steady_clock::now();
    result.training_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return result;
}

}  // namespace dsvs
